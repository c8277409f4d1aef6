"""Goodness-of-fit tests against a fitted log-normal null.

Three statistics are supported: Kolmogorov-Smirnov, Pearson chi-square on
equal-probability bins, and Anderson-Darling.  Because the null parameters
are estimated from the sample, p-values come from a parametric bootstrap by
default: replicate samples are drawn from the fitted law, refitted, and the
statistic recomputed.

Bootstrap replicates are generated in blocks of ``BLOCK`` rows.  Block ``b``
draws from ``PCG64(SeedSequence(seed, spawn_key=(b,)))``, so the replicate
set depends only on ``(seed, replicates, n)`` and not on evaluation order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri

from .distributions import DomainError, LogNormalParams, lognormal_cdf, lognormal_fit, lognormal_quantile

BLOCK = 250
AD_CLIP = 1e-12
MIN_TEST_SIZE = 20
DEFAULT_BINS = 20


class Method(str, enum.Enum):
    KS = "KS"
    CHI2 = "CHI2"
    AD = "AD"


ALL_METHODS = (Method.KS, Method.CHI2, Method.AD)


def significance_stars(p_value: float) -> str:
    """Star notation: *** below 1%, ** below 3%, * below 5%."""
    if p_value < 0.01:
        return "***"
    if p_value < 0.03:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 100:
            raise ValueError(f"bootstrap replicates must be >= 100, got {self.replicates}")


@dataclass(frozen=True)
class GofResult:
    method: Method
    statistic: float
    p_value: float
    n: int
    stars: str
    mode: str = "bootstrap"
    clipped: bool = False
    fitted: LogNormalParams | None = None

    def __post_init__(self):
        if self.stars != significance_stars(self.p_value):
            raise ValueError("stars inconsistent with p_value")


# ---------------------------------------------------------------------------
# statistics on probability-integral transforms
#
# The private helpers take F values of a sorted sample along the last axis,
# so the same code scores the observed sample and a (replicates, n) matrix.


def _ks_from_cdf(F: np.ndarray) -> np.ndarray:
    n = F.shape[-1]
    i = np.arange(1, n + 1)
    return np.max(np.maximum(i / n - F, F - (i - 1) / n), axis=-1)


def _ad_from_cdf(F: np.ndarray) -> np.ndarray:
    n = F.shape[-1]
    w = 2.0 * np.arange(1, n + 1) - 1.0
    terms = np.log(F) + np.log1p(-F[..., ::-1])
    return -n - np.sum(w * terms, axis=-1) / n


def _chi2_from_counts(counts: np.ndarray, n: int) -> np.ndarray:
    # sum (O - E)^2 / E with E = n / bins, via the exact integer sum of O^2
    bins = counts.shape[-1]
    sq = np.sum(counts.astype(np.int64) ** 2, axis=-1)
    return sq * (bins / n) - n


def _bin_counts_z(z: np.ndarray, bins: int) -> np.ndarray:
    """Counts of standardized log-values in equal-probability bins."""
    edges = ndtri(np.arange(1, bins) / bins)
    idx = np.searchsorted(edges, z.ravel(), side="right").reshape(z.shape)
    if z.ndim == 1:
        return np.bincount(idx, minlength=bins)
    offs = idx + bins * np.arange(z.shape[0])[:, None]
    return np.bincount(offs.ravel(), minlength=bins * z.shape[0]).reshape(z.shape[0], bins)


# ---------------------------------------------------------------------------
# public statistics


def _positive_sample(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
        raise DomainError("sample must be finite and strictly positive")
    return x


def ks_statistic(sample, p: LogNormalParams) -> float:
    """Two-sided Kolmogorov-Smirnov distance to the log-normal law ``p``."""
    x = np.sort(_positive_sample(sample), kind="stable")
    return float(_ks_from_cdf(lognormal_cdf(p, x)))


def chi2_statistic(sample, p: LogNormalParams, bins: int = DEFAULT_BINS) -> tuple[float, int]:
    """Pearson statistic on ``bins`` equal-probability bins.

    Returns ``(statistic, dof)`` with ``dof = bins - 3`` (two estimated
    parameters).
    """
    x = _positive_sample(sample)
    if bins < 3:
        raise ValueError(f"need at least 3 bins, got {bins} (dof would be {bins - 3})")
    if x.size < 5 * bins:
        raise ValueError(f"too few samples per bin: n={x.size} < 5*bins={5 * bins}")
    log_edges = np.log(lognormal_quantile(p, np.arange(1, bins) / bins))
    counts = np.bincount(np.searchsorted(log_edges, np.log(x), side="right"), minlength=bins)
    return float(_chi2_from_counts(counts, x.size)), bins - 3


def ad_statistic(sample, p: LogNormalParams, clip: bool = False) -> float:
    """Anderson-Darling A^2 against the log-normal law ``p``.

    With ``clip=False`` a CDF value that is numerically 0 or 1 raises;
    with ``clip=True`` CDF values are clipped into [1e-12, 1 - 1e-12].
    """
    x = np.sort(_positive_sample(sample), kind="stable")
    F = np.asarray(lognormal_cdf(p, x), dtype=float)
    if clip:
        F = np.clip(F, AD_CLIP, 1.0 - AD_CLIP)
    elif np.any((F <= 0) | (F >= 1)):
        raise ValueError("Anderson-Darling statistic not computable: CDF value at 0 or 1")
    return float(_ad_from_cdf(F))


def _ad_needs_clip(sample, p: LogNormalParams) -> bool:
    F = np.asarray(lognormal_cdf(p, np.asarray(sample, dtype=float)))
    return bool(np.any((F < AD_CLIP) | (F > 1.0 - AD_CLIP)))


# ---------------------------------------------------------------------------
# p-values


def _adinf(z: float) -> float:
    # Marsaglia & Marsaglia (2004) limiting distribution of A^2
    if z <= 0:
        return 0.0
    if z < 2:
        poly = 2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z
        return math.exp(-1.2337141 / z) / math.sqrt(z) * poly
    return math.exp(-math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z))


def _asymptotic_p(method: Method, stat: float, n: int, bins: int) -> float:
    """Classical p-values, valid only for fully specified nulls."""
    if method is Method.KS:
        return float(stats.kstwo.sf(stat, n))
    if method is Method.AD:
        return float(min(max(1.0 - _adinf(stat), 0.0), 1.0))
    dof = bins - 3
    if dof < 1:
        raise ValueError("asymptotic chi-square needs bins >= 4")
    return float(stats.chi2.sf(stat, dof))


def _type7_rows(sorted_rows: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Row-wise linear-interpolation quantiles of an already sorted matrix."""
    m = sorted_rows.shape[1]
    h = (m - 1) * probs
    j = np.floor(h).astype(np.intp)
    g = h - j
    hi = np.minimum(j + 1, m - 1)
    return sorted_rows[:, j] + g * (sorted_rows[:, hi] - sorted_rows[:, j])


def _replicate_statistics(
    method: Method, n: int, boot: BootstrapConfig, bins: int,
    source_size: int | None = None, sigma: float = 1.0,
) -> np.ndarray:
    out = np.empty(boot.replicates)
    probs = (np.arange(1, n + 1) - 0.5) / n
    for b, start in enumerate(range(0, boot.replicates, BLOCK)):
        rows = min(BLOCK, boot.replicates - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(boot.seed, spawn_key=(b,))))
        if source_size is None:
            # log-values of draws from the fitted law; refitting standardizes
            # them, so the fitted (mu, sigma) cancel out of every statistic
            y = rng.standard_normal((rows, n))
        else:
            # replay the quantile reduction on raw-scale draws; mu cancels by
            # scale equivariance, sigma does not
            w = np.sort(np.exp(sigma * rng.standard_normal((rows, source_size))), axis=1)
            y = np.log(_type7_rows(w, probs))
        z = (y - y.mean(axis=1, keepdims=True)) / y.std(axis=1, keepdims=True)
        if method is Method.CHI2:
            out[start:start + rows] = _chi2_from_counts(_bin_counts_z(z, bins), n)
            continue
        F = ndtr(np.sort(z, axis=1))
        if method is Method.KS:
            out[start:start + rows] = _ks_from_cdf(F)
        else:
            out[start:start + rows] = _ad_from_cdf(np.clip(F, AD_CLIP, 1.0 - AD_CLIP))
    return out


def default_bins(n: int) -> int:
    """20 bins when there are at least 5 expected counts each, fewer otherwise."""
    return max(3, min(DEFAULT_BINS, n // 5))


def gof_test(
    sample,
    method: Method | str,
    boot: BootstrapConfig | None = None,
    bins: int | None = None,
    mode: str = "bootstrap",
    source_size: int | None = None,
) -> GofResult:
    """Test ``sample`` against a log-normal law with estimated parameters.

    ``mode="bootstrap"`` (default) gives p = (1 + #{T* >= T}) / (B + 1) over
    B parametric-bootstrap replicates.  ``mode="asymptotic"`` uses classical
    fully-specified-null distributions and is anticonservative here; it is
    kept for comparison only.

    If ``sample`` is the k-point quantile subsample of ``source_size`` raw
    values, pass ``source_size``: each replicate is then drawn at that size
    and reduced the same way.  Without it, replicates are plain draws of size
    k, which are rougher than smoothed quantiles and make the test
    conservative.
    """
    method = Method(method)
    boot = boot if boot is not None else BootstrapConfig()
    x = _positive_sample(sample)
    if x.size < MIN_TEST_SIZE:
        raise ValueError(f"gof_test needs at least {MIN_TEST_SIZE} values, got {x.size}")
    fit = lognormal_fit(x).params
    bins = bins if bins is not None else default_bins(x.size)
    if source_size is not None and source_size < 1:
        raise ValueError(f"source_size must be >= 1, got {source_size}")

    clipped = False
    if method is Method.KS:
        stat = ks_statistic(x, fit)
    elif method is Method.CHI2:
        stat, _ = chi2_statistic(x, fit, bins)
    else:
        clipped = _ad_needs_clip(x, fit)
        stat = ad_statistic(x, fit, clip=True)

    if mode == "bootstrap":
        reps = _replicate_statistics(method, x.size, boot, bins, source_size, fit.sigma)
        p = (1.0 + np.count_nonzero(reps >= stat)) / (boot.replicates + 1.0)
    elif mode == "asymptotic":
        p = _asymptotic_p(method, stat, x.size, bins)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    p = float(p)
    return GofResult(method, float(stat), p, int(x.size), significance_stars(p), mode, clipped, fit)
