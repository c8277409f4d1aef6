"""Log-normal and four-parameter generalized Pareto laws.

The generalized Pareto family used here is

    F(x) = 1 - (1 + ((x - mu_loc) / kappa) ** (1 / gamma)) ** (-alpha),   x > mu_loc

which has a power-law survival tail with exponent ``alpha / gamma``.  It is
not the 3-parameter extreme-value GPD found in ``scipy.stats.genpareto``.

All densities, CDFs and quantiles accept scalars or arrays and return a
float for scalar input.  Sampling uses numpy's PCG64 bit generator seeded
through ``SeedSequence``; normals come from numpy's ziggurat sampler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import optimize
from scipy.special import ndtr, ndtri

ArrayLike = Union[float, np.ndarray]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DomainError(ValueError):
    """Argument outside the support or parameter space of a law."""


class DegenerateSampleError(ValueError):
    """Sample carries no information about scale (constant or too small)."""


@dataclass(frozen=True)
class LogNormalParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise DomainError(f"non-finite log-normal parameters: {self}")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class GpdParams:
    kappa: float
    alpha: float
    gamma: float
    mu_loc: float

    def __post_init__(self):
        vals = (self.kappa, self.alpha, self.gamma, self.mu_loc)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite GPD parameters: {self}")
        if self.kappa <= 0 or self.alpha <= 0 or self.gamma <= 0:
            raise DomainError(f"kappa, alpha, gamma must be > 0: {self}")

    @property
    def tail_exponent(self) -> float:
        """Exponent of the power-law survival tail, alpha / gamma."""
        return self.alpha / self.gamma


@dataclass(frozen=True)
class FitReport:
    params: Union[LogNormalParams, GpdParams, None]
    log_likelihood: float
    n: int
    converged: bool
    iterations: int
    n_free: int = 2
    message: str = ""

    @property
    def aic(self) -> float:
        return 2.0 * self.n_free - 2.0 * self.log_likelihood


def _scalar_or_array(out: np.ndarray) -> ArrayLike:
    return float(out) if np.ndim(out) == 0 else out


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


# ---------------------------------------------------------------------------
# log-normal


def lognormal_logpdf(p: LogNormalParams, x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("log-normal density requires x > 0")
    y = np.log(x)
    z = (y - p.mu) / p.sigma
    return _scalar_or_array(-0.5 * z * z - y - math.log(p.sigma) - _LOG_SQRT_2PI)


def lognormal_pdf(p: LogNormalParams, x: ArrayLike) -> ArrayLike:
    return _scalar_or_array(np.exp(lognormal_logpdf(p, x)))


def lognormal_cdf(p: LogNormalParams, x: ArrayLike) -> ArrayLike:
    """Phi((ln x - mu) / sigma); zero for x <= 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (np.log(np.where(x > 0, x, 1.0)) - p.mu) / p.sigma
    return _scalar_or_array(np.where(x > 0, ndtr(z), 0.0))


def lognormal_quantile(p: LogNormalParams, q: ArrayLike) -> ArrayLike:
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0) & (q < 1))):
        raise DomainError("quantile level must lie in (0, 1)")
    return _scalar_or_array(np.exp(p.mu + p.sigma * ndtri(q)))


def lognormal_fit(sample) -> FitReport:
    """Closed-form maximum-likelihood fit (population sd of the logs)."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError(f"need at least 2 values, got {x.size}")
    if np.any(~(x > 0)):
        raise DomainError("log-normal fit requires strictly positive values")
    y = np.log(x)
    mu = float(y.mean())
    sigma = float(y.std())
    if not sigma > 0:
        raise DegenerateSampleError("log-values have zero variance")
    n = x.size
    ll = -float(y.sum()) - n * math.log(sigma) - n * _LOG_SQRT_2PI - 0.5 * n
    return FitReport(LogNormalParams(mu, sigma), ll, n, True, 0, n_free=2)


def lognormal_sample(p: LogNormalParams, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    z = _rng(seed).standard_normal(n)
    return np.exp(p.mu + p.sigma * z)


# ---------------------------------------------------------------------------
# generalized Pareto (four-parameter form)


def _gpd_log_u(p: GpdParams, x: np.ndarray) -> np.ndarray:
    # log of ((x - mu) / kappa) ** (1 / gamma); only valid where x > mu_loc
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.log(x - p.mu_loc) - math.log(p.kappa)) / p.gamma


def gpd_cdf(p: GpdParams, x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    inside = x > p.mu_loc
    log_u = _gpd_log_u(p, np.where(inside, x, p.mu_loc + p.kappa))
    # 1 - (1 + u)^-alpha, written to stay accurate for tiny and huge u
    out = -np.expm1(-p.alpha * np.logaddexp(0.0, log_u))
    return _scalar_or_array(np.where(inside, out, 0.0))


def gpd_sf(p: GpdParams, x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=float)
    inside = x > p.mu_loc
    log_u = _gpd_log_u(p, np.where(inside, x, p.mu_loc + p.kappa))
    out = np.exp(-p.alpha * np.logaddexp(0.0, log_u))
    return _scalar_or_array(np.where(inside, out, 1.0))


def gpd_logpdf(p: GpdParams, x: ArrayLike) -> ArrayLike:
    """Log density; -inf outside the support.

    At ``x == mu_loc`` the density is 0 for gamma < 1, alpha/kappa for
    gamma == 1 and +inf for gamma > 1.
    """
    x = np.asarray(x, dtype=float)
    inside = x > p.mu_loc
    xs = np.where(inside, x, p.mu_loc + p.kappa)
    log_z = np.log(xs - p.mu_loc) - math.log(p.kappa)
    log_u = log_z / p.gamma
    out = (
        math.log(p.alpha / p.gamma)
        - math.log(p.kappa)
        + (1.0 / p.gamma - 1.0) * log_z
        - (p.alpha + 1.0) * np.logaddexp(0.0, log_u)
    )
    if p.gamma < 1:
        at_edge = -np.inf
    elif p.gamma == 1:
        at_edge = math.log(p.alpha / p.kappa)
    else:
        at_edge = np.inf
    out = np.where(inside, out, np.where(x == p.mu_loc, at_edge, -np.inf))
    return _scalar_or_array(out)


def gpd_pdf(p: GpdParams, x: ArrayLike) -> ArrayLike:
    return _scalar_or_array(np.exp(gpd_logpdf(p, x)))


def gpd_quantile(p: GpdParams, q: ArrayLike) -> ArrayLike:
    """mu_loc + kappa * ((1 - q)^(-1/alpha) - 1)^gamma."""
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0) & (q < 1))):
        raise DomainError("quantile level must lie in (0, 1)")
    base = np.expm1(-np.log1p(-q) / p.alpha)
    return _scalar_or_array(p.mu_loc + p.kappa * base**p.gamma)


def gpd_sample(p: GpdParams, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    u = _rng(seed).random(n)
    # random() can return exactly 0, which maps onto mu_loc itself
    u = np.where(u > 0, u, np.nextafter(0.0, 1.0))
    x = gpd_quantile(p, u)
    return np.maximum(x, np.nextafter(p.mu_loc, np.inf))


def gpd_log_likelihood(p: GpdParams, sample) -> float:
    return float(np.sum(gpd_logpdf(p, np.asarray(sample, dtype=float))))


# ---------------------------------------------------------------------------
# GPD maximum likelihood

_FIT_RESTARTS = 5


class _GpdObjective:
    """Negative log-likelihood over an unconstrained parameter vector.

    Free coordinates, in order: log kappa, log alpha, log gamma and
    t with mu_loc = upper - spread * exp(t); each is dropped when the
    corresponding parameter is held fixed.
    """

    def __init__(self, x, fix_alpha=None, fix_gamma=None, fix_loc=None):
        self.x = np.sort(np.asarray(x, dtype=float))
        self.n = self.x.size
        self.spread = float(self.x[-1] - self.x[0])
        self.upper = float(self.x[0] - 1e-6 * self.spread)
        self.fix_alpha = fix_alpha
        self.fix_gamma = fix_gamma
        self.fix_loc = fix_loc

    @property
    def n_free(self) -> int:
        return 1 + sum(v is None for v in (self.fix_alpha, self.fix_gamma, self.fix_loc))

    def unpack(self, theta) -> GpdParams:
        it = iter(theta)
        kappa = math.exp(next(it))
        alpha = self.fix_alpha if self.fix_alpha is not None else math.exp(next(it))
        gamma = self.fix_gamma if self.fix_gamma is not None else math.exp(next(it))
        if self.fix_loc is not None:
            mu_loc = self.fix_loc
        else:
            mu_loc = self.upper - self.spread * math.exp(next(it))
        return GpdParams(kappa, alpha, gamma, mu_loc)

    def pack(self, p: GpdParams) -> np.ndarray:
        theta = [math.log(p.kappa)]
        if self.fix_alpha is None:
            theta.append(math.log(p.alpha))
        if self.fix_gamma is None:
            theta.append(math.log(p.gamma))
        if self.fix_loc is None:
            gap = max(self.upper - p.mu_loc, 1e-12 * self.spread)
            theta.append(math.log(gap / self.spread))
        return np.array(theta)

    def __call__(self, theta) -> float:
        return self.value_and_grad(theta)[0]

    def value_and_grad(self, theta):
        """Negative log-likelihood and its gradient in theta."""
        bad = (np.inf, np.zeros_like(theta))
        try:
            p = self.unpack(theta)
        except (DomainError, OverflowError):
            return bad
        d = self.x - p.mu_loc
        if d[0] <= 0:
            return bad
        n, a, g = self.n, p.alpha, p.gamma
        log_z = np.log(d) - math.log(p.kappa)
        s = log_z / g
        log1p_u = np.logaddexp(0.0, s)
        w = np.exp(s - log1p_u)  # u / (1 + u)
        ll = n * (math.log(a / g) - math.log(p.kappa)) + (1.0 / g - 1.0) * log_z.sum() - (a + 1.0) * log1p_u.sum()
        if not np.isfinite(ll):
            return bad
        grad = [-n / g + (a + 1.0) / g * w.sum()]
        if self.fix_alpha is None:
            grad.append(n - a * log1p_u.sum())
        if self.fix_gamma is None:
            grad.append(-n - log_z.sum() / g + (a + 1.0) / g * (w * log_z).sum())
        if self.fix_loc is None:
            dmu = np.sum((-(1.0 / g - 1.0) + (a + 1.0) * w / g) / d)
            grad.append(-dmu * (self.upper - p.mu_loc))
        return -ll, -np.array(grad)


def _quantile_match(x: np.ndarray, mu_loc: float, alpha: float, gamma: float | None) -> GpdParams:
    """Starting point from the quartiles given a location and alpha."""
    q1, q2, q3 = np.quantile(x, [0.25, 0.5, 0.75])

    def c(q):
        return math.expm1(-math.log1p(-q) / alpha)

    if gamma is None:
        ratio = (q3 - mu_loc) / max(q1 - mu_loc, 1e-300)
        gamma = math.log(ratio) / math.log(c(0.75) / c(0.25))
        gamma = min(max(gamma, 0.05), 20.0)
    kappa = (q2 - mu_loc) / c(0.5) ** gamma
    return GpdParams(max(kappa, 1e-12), alpha, gamma, mu_loc)


def _starting_points(obj: _GpdObjective) -> list[GpdParams]:
    x = obj.x
    offsets = (0.5, 0.05, 0.005, 0.2, 0.02)
    alphas = (1.0, 2.0, 0.5, 4.0, 1.0)
    starts = []
    for off, a in zip(offsets, alphas):
        mu_loc = obj.fix_loc if obj.fix_loc is not None else obj.upper - off * obj.spread
        alpha = obj.fix_alpha if obj.fix_alpha is not None else a
        try:
            starts.append(_quantile_match(x, mu_loc, alpha, obj.fix_gamma))
        except (ValueError, ZeroDivisionError, DomainError):
            continue
    return starts[:_FIT_RESTARTS]


def gpd_fit(
    sample,
    fix_alpha: float | None = None,
    fix_gamma: float | None = None,
    fix_loc: float | None = None,
    init: GpdParams | None = None,
) -> FitReport:
    """Maximum-likelihood fit of the four-parameter GPD.

    Runs L-BFGS with the analytic gradient from five quartile-matched
    starting points plus ``init`` when given, and keeps the best.  The
    returned log-likelihood is never below that of ``init``, which makes
    nested fits (alpha free vs alpha fixed) monotone when chained.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 8:
        raise DegenerateSampleError(f"need at least 8 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("sample contains non-finite values")
    if not x.max() > x.min():
        raise DegenerateSampleError("sample values are all identical")
    if fix_loc is not None and not fix_loc < x.min():
        raise DomainError("fixed location must lie below the sample minimum")

    obj = _GpdObjective(x, fix_alpha, fix_gamma, fix_loc)
    starts = _starting_points(obj)
    if init is not None:
        starts.insert(0, init)

    best_theta, best_val, best_ok = None, np.inf, False
    iterations = 0
    for start in starts:
        theta0 = obj.pack(start)
        val0 = obj(theta0)
        if val0 < best_val:
            best_theta, best_val, best_ok = theta0, val0, False
        res = optimize.minimize(
            obj.value_and_grad, theta0, jac=True, method="L-BFGS-B",
            options={"maxiter": 2000, "ftol": 1e-13, "gtol": 1e-7},
        )
        iterations += int(res.nit)
        if res.fun <= best_val:
            best_theta, best_val = res.x, float(res.fun)
            best_ok = bool(res.success) and np.isfinite(res.fun)

    if best_theta is None or not np.isfinite(best_val):
        return FitReport(None, -np.inf, x.size, False, iterations, obj.n_free, "no finite likelihood found")
    params = obj.unpack(best_theta)
    msg = "" if best_ok else "optimizer did not report convergence"
    return FitReport(params, float(-best_val), x.size, bool(best_ok), iterations, obj.n_free, msg)
