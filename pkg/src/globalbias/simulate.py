"""Gibrat and Kesten process simulators, with Hill tail-index estimation.

Gibrat:  X_t = R_t X_{t-1}
Kesten:  X_t = R_t X_{t-1} + eps_t,  E[eps_t] > 0

Growth factors are log-normal, log R ~ Normal(m, v), so the stationary
Kesten tail exponent has the closed form s* = -2m/v.

Paths are simulated in blocks of ``PATH_BLOCK``.  Block ``b`` draws growth
factors from ``PCG64(SeedSequence(seed, spawn_key=(b, 0)))`` and additive
noise from ``spawn_key=(b, 1)``, so a Kesten run with zero noise consumes
exactly the same growth draws as the Gibrat run with the same seed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

PATH_BLOCK = 8192


@dataclass(frozen=True)
class LogNormalGrowth:
    """log R ~ Normal(m, v)."""

    m: float = 0.0
    v: float = 0.04

    def __post_init__(self):
        if not (math.isfinite(self.m) and math.isfinite(self.v)) or self.v <= 0:
            raise ValueError(f"growth: need finite m and v > 0, got m={self.m}, v={self.v}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.exp(self.m + math.sqrt(self.v) * rng.standard_normal(size))


@dataclass(frozen=True)
class ConstantNoise:
    c: float = 1.0

    @property
    def mean(self) -> float:
        return self.c

    def draw(self, rng: np.random.Generator, size: int):
        return self.c


@dataclass(frozen=True)
class ExponentialNoise:
    scale: float = 1.0

    @property
    def mean(self) -> float:
        return self.scale

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(self.scale, size)


Noise = Union[ConstantNoise, ExponentialNoise]


@dataclass(frozen=True)
class ProcessConfig:
    steps: int
    n_paths: int
    growth: LogNormalGrowth = field(default_factory=LogNormalGrowth)
    epsilon: Noise | None = None
    x0: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps: must be >= 1, got {self.steps}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths: must be >= 1, got {self.n_paths}")
        if not (self.x0 > 0 and math.isfinite(self.x0)):
            raise ValueError(f"x0: must be a positive real, got {self.x0}")
        if self.epsilon is not None:
            if not self.epsilon.mean >= 0:
                raise ValueError(f"epsilon: mean must be > 0, got {self.epsilon.mean}")
            if self.epsilon.mean == 0:
                warnings.warn("epsilon mean is 0: the process reduces to Gibrat growth", RuntimeWarning, stacklevel=3)


def _block_rng(seed: int, block: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block, stream))))


def _run(cfg: ProcessConfig, noise: Noise | None) -> np.ndarray:
    out = np.empty(cfg.n_paths)
    for b, start in enumerate(range(0, cfg.n_paths, PATH_BLOCK)):
        size = min(PATH_BLOCK, cfg.n_paths - start)
        g_rng = _block_rng(cfg.seed, b, 0)
        e_rng = _block_rng(cfg.seed, b, 1)
        x = np.full(size, float(cfg.x0))
        for _ in range(cfg.steps):
            x = cfg.growth.draw(g_rng, size) * x
            if noise is not None:
                x = x + noise.draw(e_rng, size)
        out[start:start + size] = x
    return out


def gibrat_simulate(cfg: ProcessConfig) -> np.ndarray:
    """X_T for ``n_paths`` independent multiplicative-growth paths."""
    if cfg.epsilon is not None:
        raise ValueError("gibrat_simulate requires a config without epsilon")
    return _run(cfg, None)


def kesten_simulate(cfg: ProcessConfig) -> np.ndarray:
    """X_T for ``n_paths`` paths of X_t = R_t X_{t-1} + eps_t."""
    if cfg.epsilon is None:
        raise ValueError("kesten_simulate requires an epsilon law")
    if cfg.growth.m >= 0:
        warnings.warn(
            f"E[log R] = {cfg.growth.m} >= 0: the Kesten process has no stationary law",
            RuntimeWarning, stacklevel=2,
        )
    return _run(cfg, cfg.epsilon)


def kesten_exponent(m: float, v: float) -> float:
    """Tail exponent s* solving E[R^s] = exp(m s + v s^2 / 2) = 1."""
    if not v > 0:
        raise ValueError(f"v must be > 0, got {v}")
    if not m < 0:
        raise ValueError(f"m must be < 0 for a stationary heavy tail, got {m}")
    return -2.0 * m / v


@dataclass(frozen=True)
class TailEstimate:
    index: float
    k_used: int
    stderr: float


def default_hill_k(n: int) -> int:
    return math.ceil(n ** (2.0 / 3.0))


def hill_tail_index(values, k: int | None = None) -> TailEstimate:
    """Hill estimator over the top ``k`` order statistics.

    index = k / sum_{i=1..k} ln(x_(n-i+1) / x_(n-k)),  stderr = index / sqrt(k).
    ``k`` defaults to ceil(n^(2/3)).
    """
    x = np.asarray(values, dtype=float).ravel()
    if np.any(~(x > 0)):
        raise ValueError("Hill estimator needs strictly positive values")
    n = x.size
    k = default_hill_k(n) if k is None else int(k)
    if k < 10:
        raise ValueError(f"k must be >= 10, got {k}")
    if k >= n:
        raise ValueError(f"k must be < sample size ({n}), got {k}")
    top = np.sort(x)[n - k - 1:]
    s = float(np.sum(np.log(top[1:] / top[0])))
    if not s > 0:
        raise ValueError("upper order statistics are all equal")
    index = k / s
    return TailEstimate(index, k, index / math.sqrt(k))


# ---------------------------------------------------------------------------
# flat key = value config files

_CONFIG_KEYS = {
    "process", "x0", "steps", "n_paths", "m", "v", "epsilon", "epsilon_mean", "seed",
    "hill", "hill_k", "gof", "bootstrap",
}


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _typed(raw: dict[str, str], key: str, kind, default=None):
    if key not in raw:
        if default is None:
            raise ValueError(f"{key}: required field missing")
        return default
    try:
        return kind(raw[key])
    except ValueError:
        raise ValueError(f"{key}: cannot parse {raw[key]!r} as {kind.__name__}") from None


def config_from_mapping(raw: dict[str, str], seed: int | None = None) -> tuple[str, ProcessConfig]:
    """Build ``(process, ProcessConfig)`` from a parsed flat config.

    ``process`` is ``gibrat`` or ``kesten``.  An explicit ``seed`` argument
    overrides any ``seed`` key in the file.
    """
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise ValueError(f"{unknown[0]}: unknown config field")
    process = raw.get("process", "")
    if process not in ("gibrat", "kesten"):
        raise ValueError(f"process: must be 'gibrat' or 'kesten', got {process!r}")
    growth = LogNormalGrowth(_typed(raw, "m", float), _typed(raw, "v", float))
    epsilon = None
    if process == "kesten":
        law = raw.get("epsilon", "constant")
        mean = _typed(raw, "epsilon_mean", float, 1.0)
        if law == "constant":
            epsilon = ConstantNoise(mean)
        elif law == "exponential":
            if not mean > 0:
                raise ValueError(f"epsilon_mean: must be > 0, got {mean}")
            epsilon = ExponentialNoise(mean)
        else:
            raise ValueError(f"epsilon: must be 'constant' or 'exponential', got {law!r}")
    elif "epsilon" in raw or "epsilon_mean" in raw:
        raise ValueError("epsilon: not allowed for a gibrat process")
    if seed is None:
        seed = _typed(raw, "seed", int)
    cfg = ProcessConfig(
        steps=_typed(raw, "steps", int),
        n_paths=_typed(raw, "n_paths", int),
        growth=growth,
        epsilon=epsilon,
        x0=_typed(raw, "x0", float, 1.0),
        seed=seed,
    )
    return process, cfg


def load_process_config(path, seed: int | None = None) -> tuple[str, ProcessConfig]:
    return config_from_mapping(parse_flat_config(Path(path).read_text(encoding="utf-8")), seed)


def config_to_text(process: str, cfg: ProcessConfig) -> str:
    lines = [f"process = {process}", f"x0 = {cfg.x0!r}", f"steps = {cfg.steps}",
             f"n_paths = {cfg.n_paths}", f"m = {cfg.growth.m!r}", f"v = {cfg.growth.v!r}"]
    if isinstance(cfg.epsilon, ConstantNoise):
        lines += ["epsilon = constant", f"epsilon_mean = {cfg.epsilon.c!r}"]
    elif isinstance(cfg.epsilon, ExponentialNoise):
        lines += ["epsilon = exponential", f"epsilon_mean = {cfg.epsilon.scale!r}"]
    lines.append(f"seed = {cfg.seed}")
    return "\n".join(lines) + "\n"


__all__ = [
    "ConstantNoise", "ExponentialNoise", "LogNormalGrowth", "ProcessConfig", "TailEstimate",
    "gibrat_simulate", "kesten_simulate", "kesten_exponent", "hill_tail_index", "default_hill_k",
    "parse_flat_config", "config_from_mapping", "load_process_config", "config_to_text",
]
