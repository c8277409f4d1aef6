"""End-to-end analysis: daily p-value series, Q-Q data and bias-shape fits."""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    FitReport,
    LogNormalParams,
    gpd_fit,
    gpd_pdf,
    lognormal_fit,
    lognormal_pdf,
    lognormal_quantile,
)
from .gof import ALL_METHODS, BootstrapConfig, GofResult, Method, gof_test, significance_stars
from .ingest import CrossSection, Indicator, IndicatorPanel, cross_section
from .sampling import SamplingProtocol, Sign, quantile_subsample

log = logging.getLogger(__name__)

MIN_SECTION_SIZE = 20
MIN_SHAPE_SIZE = 50

_INDICATOR_CODE = {ind: i for i, ind in enumerate(Indicator)}
_SIGN_CODE = {s: i for i, s in enumerate(Sign)}
_METHOD_CODE = {m: i for i, m in enumerate(ALL_METHODS)}


def day_seed(master: int, date: dt.date, indicator: Indicator, sign: Sign, method: Method) -> int:
    """Per-test seed derived from the master seed and the test's coordinates."""
    ss = np.random.SeedSequence(
        [master, date.toordinal(), _INDICATOR_CODE[indicator], _SIGN_CODE[sign], _METHOD_CODE[method]]
    )
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class DayResult:
    date: dt.date
    results: dict[Method, GofResult]
    n_raw: int
    n_section: int


@dataclass(frozen=True)
class PValueSeries:
    indicator: Indicator
    sign: Sign
    entries: tuple[DayResult, ...]
    skipped: tuple[tuple[dt.date, str], ...] = ()
    minima: dict[Method, tuple[dt.date, float]] = field(default_factory=dict)

    @property
    def total_days(self) -> int:
        return len(self.entries) + len(self.skipped)

    def p_values(self, method: Method | str) -> np.ndarray:
        method = Method(method)
        return np.array([e.results[method].p_value for e in self.entries if method in e.results])


def series_minima(entries) -> dict[Method, tuple[dt.date, float]]:
    """Lowest p-value per method; ties resolve to the earliest date."""
    minima = {}
    for e in entries:
        for method, res in e.results.items():
            if method not in minima or res.p_value < minima[method][1]:
                minima[method] = (e.date, res.p_value)
    return minima


def daily_bias_series(
    panel: IndicatorPanel,
    indicator: Indicator | str,
    sign: Sign | str = Sign.ALL,
    protocol: SamplingProtocol | None = None,
    boot: BootstrapConfig | None = None,
    methods=ALL_METHODS,
) -> PValueSeries:
    """Goodness-of-fit p-values for every day an indicator is observed.

    Each day: cross-section, quantile subsample, then one bootstrap test per
    method seeded by ``day_seed(boot.seed, date, indicator, sign, method)``.
    Bootstrap replicates repeat the subsampling from the section size.
    Days that fail a precondition are recorded in ``skipped``.
    """
    indicator = Indicator(indicator)
    sign = Sign(sign)
    protocol = protocol or SamplingProtocol()
    protocol = SamplingProtocol(protocol.magnitude_cap, protocol.quantile_points, sign)
    boot = boot or BootstrapConfig()
    methods = tuple(Method(m) for m in methods)

    dates = panel.dates(indicator)
    if not dates:
        raise ValueError(f"panel has no {indicator.value} observations")
    entries, skipped = [], []
    for date in dates:
        try:
            section = cross_section(panel, date, indicator, protocol)
            if section.retained < MIN_SECTION_SIZE:
                raise ValueError(f"only {section.retained} values after filtering (< {MIN_SECTION_SIZE})")
            sub = quantile_subsample(section.values, protocol.quantile_points)
            results = {}
            for method in methods:
                cfg = BootstrapConfig(boot.replicates, day_seed(boot.seed, date, indicator, sign, method))
                results[method] = gof_test(sub, method, cfg, source_size=section.retained)
        except ValueError as exc:
            log.info("skipping %s %s %s: %s", indicator.value, sign.value, date, exc)
            skipped.append((date, str(exc)))
            continue
        entries.append(DayResult(date, results, section.raw, section.retained))
    if not entries:
        raise ValueError(f"no analyzable days for {indicator.value} ({sign.value})")
    return PValueSeries(indicator, sign, tuple(entries), tuple(skipped), series_minima(entries))


# ---------------------------------------------------------------------------
# output formats

SERIES_HEADER = ("date", "method", "statistic", "p_value", "stars", "n")


def series_to_csv(series: PValueSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_HEADER)
    for e in series.entries:
        for method, r in e.results.items():
            w.writerow([e.date.isoformat(), method.value, repr(r.statistic), repr(r.p_value), r.stars, r.n])
    return buf.getvalue()


def series_to_dict(series: PValueSeries) -> dict:
    return {
        "indicator": series.indicator.value,
        "sign": series.sign.value,
        "analyzed_days": len(series.entries),
        "skipped_days": [{"date": d.isoformat(), "reason": r} for d, r in series.skipped],
        "minima": {
            m.value: {"date": d.isoformat(), "p_value": p, "stars": significance_stars(p)}
            for m, (d, p) in series.minima.items()
        },
        "entries": [
            {
                "date": e.date.isoformat(),
                "n_raw": e.n_raw,
                "n_section": e.n_section,
                "tests": {
                    m.value: {"statistic": r.statistic, "p_value": r.p_value, "stars": r.stars, "n": r.n}
                    for m, r in e.results.items()
                },
            }
            for e in series.entries
        ],
    }


def lowest_p_rows(series_list) -> list[dict]:
    """Lowest p-value per (indicator, sign, method), with stars."""
    rows = []
    for s in series_list:
        row = {"indicator": s.indicator.value, "sign": s.sign.value, "days": len(s.entries)}
        for m in ALL_METHODS:
            if m in s.minima:
                d, p = s.minima[m]
                row[m.value] = {"p_value": p, "stars": significance_stars(p), "date": d.isoformat()}
        rows.append(row)
    return rows


def lowest_p_to_csv(series_list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["indicator", "sign", "method", "lowest_p_value", "stars", "date", "days"])
    for row in lowest_p_rows(series_list):
        for m in ALL_METHODS:
            if m.value in row:
                c = row[m.value]
                w.writerow([row["indicator"], row["sign"], m.value, f"{c['p_value']:.4f}", c["stars"],
                            c["date"], row["days"]])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Q-Q data


@dataclass(frozen=True)
class QQData:
    """Empirical vs fitted log-normal quantiles at probabilities (i - 0.5)/k."""

    points: np.ndarray  # shape (k, 2): theoretical, empirical
    fitted: LogNormalParams

    def log_correlation(self) -> float:
        """Pearson correlation of the log-log Q-Q points (1 for a straight line)."""
        lp = np.log(self.points)
        return float(np.corrcoef(lp[:, 0], lp[:, 1])[0, 1])

    def log_residuals(self) -> np.ndarray:
        """log empirical minus log theoretical quantile."""
        lp = np.log(self.points)
        return lp[:, 1] - lp[:, 0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["probability", "theoretical", "empirical"])
        k = len(self.points)
        for i, (t, e) in enumerate(self.points, 1):
            w.writerow([repr((i - 0.5) / k), repr(float(t)), repr(float(e))])
        return buf.getvalue()


def qq_plot_data(section: CrossSection | np.ndarray, k: int = 300) -> QQData:
    values = section.values if isinstance(section, CrossSection) else np.asarray(section, dtype=float)
    if k < 10:
        raise ValueError(f"k must be >= 10, got {k}")
    if values.size < k:
        raise ValueError(f"section has {values.size} values, fewer than k={k}")
    fitted = lognormal_fit(values).params
    probs = (np.arange(1, k + 1) - 0.5) / k
    theo = lognormal_quantile(fitted, probs)
    emp = quantile_subsample(values, k)
    return QQData(np.column_stack([theo, emp]), fitted)


# ---------------------------------------------------------------------------
# bias shape


@dataclass(frozen=True)
class ShapeComparison:
    lognormal: FitReport
    gpd1: FitReport
    gpd2: FitReport

    @property
    def aic(self) -> dict[str, float]:
        return {name: rep.aic for name, rep in self.models().items()}

    def models(self) -> dict[str, FitReport]:
        return {"lognormal": self.lognormal, "gpd1": self.gpd1, "gpd2": self.gpd2}

    def to_dict(self) -> dict:
        out = {}
        for name, rep in self.models().items():
            out[name] = {
                "params": None if rep.params is None else dict(vars(rep.params)),
                "log_likelihood": rep.log_likelihood if math.isfinite(rep.log_likelihood) else None,
                "aic": rep.aic if math.isfinite(rep.aic) else None,
                "free_parameters": rep.n_free,
                "n": rep.n,
                "converged": rep.converged,
                "iterations": rep.iterations,
                "message": rep.message,
            }
        return out


def _failed(n: int, n_free: int, exc: Exception) -> FitReport:
    return FitReport(None, -math.inf, n, False, 0, n_free, str(exc))


def fit_bias_shape(section: CrossSection | np.ndarray) -> ShapeComparison:
    """Fit log-normal, GPD-1 (alpha = 1) and GPD-2 (alpha free) to one sample.

    GPD-2 is started from the GPD-1 optimum so its log-likelihood is never
    below GPD-1's.  No winner is declared.
    """
    values = section.values if isinstance(section, CrossSection) else np.asarray(section, dtype=float)
    if values.size < MIN_SHAPE_SIZE:
        raise ValueError(f"need at least {MIN_SHAPE_SIZE} values, got {values.size}")
    n = int(values.size)
    try:
        ln = lognormal_fit(values)
    except ValueError as exc:
        ln = _failed(n, 2, exc)
    try:
        g1 = gpd_fit(values, fix_alpha=1.0)
    except ValueError as exc:
        g1 = _failed(n, 3, exc)
    try:
        g2 = gpd_fit(values, init=g1.params)
    except ValueError as exc:
        g2 = _failed(n, 4, exc)
    return ShapeComparison(ln, g1, g2)


def overlay_grid(values, comparison: ShapeComparison, points: int = 200) -> np.ndarray:
    """Density curves of the three fits on a log-spaced grid over the data range.

    Columns: x, lognormal, gpd1, gpd2 (NaN for a model without parameters).
    """
    v = np.asarray(values, dtype=float)
    x = np.geomspace(v.min(), v.max(), points)
    cols = [x]
    ln = comparison.lognormal.params
    cols.append(lognormal_pdf(ln, x) if ln is not None else np.full(points, np.nan))
    for rep in (comparison.gpd1, comparison.gpd2):
        cols.append(gpd_pdf(rep.params, x) if rep.params is not None else np.full(points, np.nan))
    return np.column_stack(cols)


def overlay_to_csv(grid: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "lognormal_pdf", "gpd1_pdf", "gpd2_pdf"])
    for row in grid:
        w.writerow([repr(float(c)) for c in row])
    return buf.getvalue()


def dumps(obj) -> str:
    """Deterministic JSON used for every artifact written by the CLI."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
