"""Sample preparation: magnitude cap, sign split and quantile subsampling."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

log = logging.getLogger(__name__)


class Sign(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ALL = "all"


@dataclass(frozen=True)
class SamplingProtocol:
    magnitude_cap: float = 1000.0
    quantile_points: int = 300
    sign: Sign = Sign.ALL

    def __post_init__(self):
        if not self.magnitude_cap > 0:
            raise ValueError(f"magnitude_cap must be > 0, got {self.magnitude_cap}")
        if self.quantile_points < 10:
            raise ValueError(f"quantile_points must be >= 10, got {self.quantile_points}")
        object.__setattr__(self, "sign", Sign(self.sign))


class SignSplit(NamedTuple):
    positive: np.ndarray
    negative: np.ndarray
    zeros: int


def magnitude_filter(values, cap: float = 1000.0) -> np.ndarray:
    """Keep values with ``|v| < cap`` (strict), preserving order."""
    if not cap > 0:
        raise ValueError(f"cap must be > 0, got {cap}")
    v = np.asarray(values, dtype=float).ravel()
    return v[np.abs(v) < cap]


def sign_split(values) -> SignSplit:
    """Split into positive values and sign-flipped negative values.

    Zeros belong to neither branch; their count is returned and logged.
    """
    v = np.asarray(values, dtype=float).ravel()
    zeros = int(np.count_nonzero(v == 0))
    if zeros:
        log.info("sign_split discarded %d zero values", zeros)
    return SignSplit(v[v > 0], -v[v < 0], zeros)


def quantile_subsample(values, k: int = 300) -> np.ndarray:
    """Empirical quantiles at probabilities (i - 0.5)/k, i = 1..k.

    Interpolation is linear between order statistics: for sorted values
    x[0..n-1] and probability q, with h = (n - 1) q, the quantile is
    x[floor(h)] + (h - floor(h)) * (x[floor(h) + 1] - x[floor(h)]).
    This is Hyndman & Fan type 7, numpy's ``method="linear"``.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot subsample an empty sample")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    probs = (np.arange(1, k + 1) - 0.5) / k
    return np.quantile(v, probs, method="linear")
