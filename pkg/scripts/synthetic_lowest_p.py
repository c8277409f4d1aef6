"""Lowest daily p-values per indicator on a synthetic panel.

    python3 scripts/synthetic_lowest_p.py --days 30 --companies 500 --out lowest_p_demo

Builds a panel where PE follows GPD-1, PFE follows GPD-2, PB follows a
log-normal and PIC is a signed cash-flow ratio with log-normal magnitudes,
writes it to ``<out>/panel.csv`` and runs the ``analyze`` command on it.
"""
import argparse
import datetime as dt
from pathlib import Path

import numpy as np

from globalbias import GpdParams, IndicatorPanel, LogNormalParams, gpd_sample, lognormal_sample, write_panel
from globalbias.cli import main as cli_main

LAWS = {
    "PE": lambda n, s: gpd_sample(GpdParams(18.82, 1.0, 0.385, 0.993), n, s),
    "PFE": lambda n, s: gpd_sample(GpdParams(13.70, 0.515, 0.238, 0.993), n, s),
    "PB": lambda n, s: lognormal_sample(LogNormalParams(0.2, 0.8), n, s),
}


def build(days, companies, seed):
    rng = np.random.default_rng(seed)
    start = dt.date(2007, 1, 4)
    records = []
    for d in range(days):
        date = start + dt.timedelta(days=d)
        for j, (code, law) in enumerate(LAWS.items()):
            for i, v in enumerate(law(companies, seed * 10_000 + 10 * d + j)):
                records.append((date, f"c{i:05d}", code, float(v)))
        mags = lognormal_sample(LogNormalParams(0.0, 1.0), companies, seed * 10_000 + 10 * d + 9)
        signs = np.where(rng.random(companies) < 0.7, 1.0, -1.0)
        for i, v in enumerate(mags * signs):
            records.append((date, f"c{i:05d}", "PIC", float(v)))
    return IndicatorPanel.from_records(records)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--days", type=int, default=30)
    ap.add_argument("--companies", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bootstrap", type=int, default=2000)
    ap.add_argument("--out", type=Path, default=Path("lowest_p_demo"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    panel_path = args.out / "panel.csv"
    write_panel(build(args.days, args.companies, args.seed), panel_path)
    return cli_main(["analyze", "--panel", str(panel_path), "--seed", str(args.seed),
                     "--bootstrap", str(args.bootstrap), "--out", str(args.out / "analysis"), "--force"])


if __name__ == "__main__":
    raise SystemExit(main())
