"""Indicator panels: CSV loading, validation and daily cross-sections.

Panel files are long-format CSV, UTF-8, with the header
``date,company,indicator,value``.  Dates are ISO-8601 (``YYYY-MM-DD``),
values use ``.`` as decimal point and no thousands separators.  Rows
missing for a (date, company, indicator) are simply absent.
"""
from __future__ import annotations

import datetime as dt
import enum
import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd

from .sampling import SamplingProtocol, Sign, magnitude_filter, sign_split

COLUMNS = ("date", "company", "indicator", "value")


class Indicator(str, enum.Enum):
    PE = "PE"
    PFE = "PFE"
    PB = "PB"
    POC = "POC"
    PIC = "PIC"
    PFC = "PFC"
    PCE = "PCE"

    @property
    def is_cash_flow(self) -> bool:
        return self in CASH_FLOW


CASH_FLOW = frozenset({Indicator.POC, Indicator.PIC, Indicator.PFC})


class PanelError(ValueError):
    """Malformed panel file or inconsistent panel contents."""


@dataclass(frozen=True, eq=False)
class IndicatorPanel:
    """Validated (date, company, indicator, value) observations.

    ``frame`` is sorted by (indicator, date, company) and must not be mutated.
    """

    frame: pd.DataFrame

    def __len__(self) -> int:
        return len(self.frame)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IndicatorPanel):
            return NotImplemented
        return self.frame.equals(other.frame)

    def indicators(self) -> list[Indicator]:
        return [Indicator(i) for i in sorted(self.frame["indicator"].unique())]

    def dates(self, indicator: Indicator | str | None = None) -> list[dt.date]:
        f = self.frame
        if indicator is not None:
            f = f[f["indicator"] == Indicator(indicator).value]
        return sorted(f["date"].unique())

    @cached_property
    def _groups(self) -> dict:
        return {
            key: grp.to_numpy(dtype=float)
            for key, grp in self.frame.groupby(["indicator", "date"], sort=False)["value"]
        }

    def values(self, date: dt.date, indicator: Indicator | str) -> np.ndarray:
        return self._groups.get((Indicator(indicator).value, date), np.empty(0)).copy()

    @classmethod
    def from_records(cls, records) -> "IndicatorPanel":
        """Build a panel from (date, company, indicator, value) tuples."""
        df = pd.DataFrame(list(records), columns=list(COLUMNS))
        df["date"] = [d if isinstance(d, dt.date) else dt.date.fromisoformat(str(d)) for d in df["date"]]
        return cls(_validate(df, first_line=None))


def _validate(df: pd.DataFrame, first_line: int | None) -> pd.DataFrame:
    def where(i):
        return f"line {i + first_line}" if first_line is not None else f"record {i}"

    df = df.copy()
    df["company"] = df["company"].astype(str)
    df["indicator"] = df["indicator"].astype(str)
    valid = {i.value for i in Indicator}
    bad = ~df["indicator"].isin(valid)
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise PanelError(f"{where(i)}: unknown indicator {df['indicator'].iloc[i]!r}")
    df["value"] = df["value"].astype(float)
    if not np.all(np.isfinite(df["value"].to_numpy())):
        i = int(np.flatnonzero(~np.isfinite(df["value"].to_numpy()))[0])
        raise PanelError(f"{where(i)}: non-finite value")
    dup = df.duplicated(subset=["date", "company", "indicator"], keep="first")
    if dup.any():
        i = int(np.flatnonzero(dup.to_numpy())[0])
        key = (df["date"].iloc[i].isoformat(), df["company"].iloc[i], df["indicator"].iloc[i])
        raise PanelError(f"{where(i)}: duplicate key (date, company, indicator) = {key}")
    df = df.sort_values(["indicator", "date", "company"], kind="stable").reset_index(drop=True)
    return df[list(COLUMNS)]


def load_panel(path, format: str = "csv") -> IndicatorPanel:
    """Load and validate a panel file; errors cite 1-based file line numbers."""
    if format != "csv":
        raise ValueError(f"unsupported panel format {format!r}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"panel file not found: {path}") from None
    try:
        raw = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.ParserError as exc:
        raise PanelError(f"{path}: {exc}") from None
    except pd.errors.EmptyDataError:
        raise PanelError(f"{path}: empty file") from None
    missing = [c for c in COLUMNS if c not in raw.columns]
    if missing:
        raise PanelError(f"{path}: missing column(s) {', '.join(missing)}")
    # data row i sits on file line i + 2 (header is line 1)
    for i, row in enumerate(raw[list(COLUMNS)].itertuples(index=False)):
        line = i + 2
        if any(cell == "" for cell in row):
            raise PanelError(f"{path}: line {line}: empty field")
    dates = pd.to_datetime(raw["date"], format="%Y-%m-%d", errors="coerce")
    if dates.isna().any():
        i = int(np.flatnonzero(dates.isna().to_numpy())[0])
        raise PanelError(f"{path}: line {i + 2}: bad date {raw['date'].iloc[i]!r}")
    # python float() is correctly rounded; the pandas fast parser is not
    values = np.empty(len(raw))
    for i, cell in enumerate(raw["value"]):
        try:
            values[i] = float(cell)
        except ValueError:
            raise PanelError(f"{path}: line {i + 2}: non-numeric value {cell!r}") from None
    df = pd.DataFrame({
        "date": [d.date() for d in dates],
        "company": raw["company"],
        "indicator": raw["indicator"],
        "value": values,
    })
    try:
        return IndicatorPanel(_validate(df, first_line=2))
    except PanelError as exc:
        raise PanelError(f"{path}: {exc}") from None


def write_panel(panel: IndicatorPanel, path) -> None:
    df = panel.frame.copy()
    df["date"] = [d.isoformat() for d in df["date"]]
    df["value"] = [repr(float(v)) for v in df["value"]]
    df.to_csv(path, index=False, lineterminator="\n")


@dataclass(frozen=True)
class CrossSection:
    date: dt.date
    indicator: Indicator
    sign: Sign
    values: np.ndarray
    raw: int
    dropped_cap: int
    dropped_sign: int
    dropped_zero: int

    @property
    def retained(self) -> int:
        return int(self.values.size)


def cross_section(
    panel: IndicatorPanel,
    date: dt.date,
    indicator: Indicator | str,
    protocol: SamplingProtocol | None = None,
) -> CrossSection:
    """One day's sample for one indicator after the magnitude cap and sign rule.

    Sign rule: ``positive`` keeps v > 0; ``negative`` keeps |v| for v < 0 and
    is only defined for cash-flow ratios; ``all`` pools |v| of nonzero values
    for cash-flow ratios and keeps only v > 0 for the other indicators.
    """
    protocol = protocol or SamplingProtocol()
    indicator = Indicator(indicator)
    if isinstance(date, str):
        date = dt.date.fromisoformat(date)
    raw = panel.values(date, indicator)
    if raw.size == 0:
        raise ValueError(f"no data for {indicator.value} on {date.isoformat()}")
    sign = protocol.sign
    if sign is Sign.NEGATIVE and not indicator.is_cash_flow:
        raise ValueError(f"sign=negative is only defined for cash-flow ratios, not {indicator.value}")

    capped = magnitude_filter(raw, protocol.magnitude_cap)
    pos, neg, zeros = sign_split(capped)
    if sign is Sign.POSITIVE:
        kept, dropped_sign = pos, neg.size
    elif sign is Sign.NEGATIVE:
        kept, dropped_sign = neg, pos.size
    elif indicator.is_cash_flow:
        kept, dropped_sign = np.concatenate([pos, neg]), 0
    else:
        kept, dropped_sign = pos, neg.size
    section = CrossSection(
        date, indicator, sign, kept, int(raw.size), int(raw.size - capped.size), int(dropped_sign), zeros
    )
    if kept.size == 0:
        raise ValueError(f"no {sign.value} values left for {indicator.value} on {date.isoformat()}")
    return section
