"""Command-line interface: ``globalbias {analyze,fit,simulate,gof}``.

Every run writes one output directory holding flat CSV/JSON data files and
a single ``manifest.json``.  Data files are byte-identical for identical
inputs, flags and seed; timestamps live only in the manifest.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import DegenerateSampleError
from .gof import ALL_METHODS, BootstrapConfig, Method, gof_test
from .ingest import Indicator, cross_section, load_panel
from .pipeline import (
    daily_bias_series,
    dumps,
    fit_bias_shape,
    overlay_grid,
    overlay_to_csv,
    qq_plot_data,
    series_to_csv,
    series_to_dict,
    lowest_p_rows,
    lowest_p_to_csv,
)
from .sampling import SamplingProtocol, Sign, quantile_subsample
from .simulate import (
    config_to_text,
    gibrat_simulate,
    hill_tail_index,
    kesten_exponent,
    kesten_simulate,
    load_process_config,
    parse_flat_config,
)

log = logging.getLogger("globalbias")

MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_manifest(out_dir) -> bool:
    """True when every input and output digest in the manifest still matches."""
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / MANIFEST).read_text())
    for path, digest in manifest["inputs"].items():
        if sha256_file(path) != digest:
            return False
    for name, digest in manifest["outputs"].items():
        if sha256_file(out_dir / name) != digest:
            return False
    return True


class RunDir:
    """Output directory that is removed again if the run fails."""

    def __init__(self, path, force: bool):
        self.path = Path(path)
        self.force = force
        self.files: dict[str, str] = {}

    def __enter__(self):
        if self.path.exists():
            if not self.force:
                raise RuntimeError(f"output directory {self.path} exists (use --force to overwrite)")
            shutil.rmtree(self.path)
        self.path.mkdir(parents=True)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.path, ignore_errors=True)
        return False

    def write(self, name: str, text: str) -> None:
        (self.path / name).write_text(text, encoding="utf-8", newline="\n")
        self.files[name] = text

    def manifest(self, command: str, config: dict, seed, inputs, started: str) -> None:
        body = {
            "command": command,
            "config": config,
            "seed": seed,
            "started": started,
            "finished": _now(),
            "inputs": {str(Path(p).resolve()): sha256_file(p) for p in inputs},
            "outputs": {n: hashlib.sha256(t.encode("utf-8")).hexdigest() for n, t in sorted(self.files.items())},
            "version": __version__,
        }
        (self.path / MANIFEST).write_text(dumps(body), encoding="utf-8", newline="\n")


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _snapshot(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _protocol(args, sign=Sign.ALL) -> SamplingProtocol:
    return SamplingProtocol(args.cap, args.quantiles or 300, sign)


def _signs_for(indicator: Indicator, choice: str) -> list[Sign]:
    if choice == "auto":
        return [Sign.POSITIVE, Sign.NEGATIVE] if indicator.is_cash_flow else [Sign.ALL]
    return [Sign(choice)]


def _indicators(arg, panel) -> list[Indicator]:
    if arg is None or arg == "all":
        return panel.indicators()
    return [Indicator(s.strip().upper()) for s in arg.split(",")]


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    started = _now()
    panel = load_panel(args.panel)
    boot = BootstrapConfig(args.bootstrap, args.seed)
    series_list, empty = [], []
    for ind in _indicators(args.indicator, panel):
        for sign in _signs_for(ind, args.sign):
            log.info("analyzing %s (%s)", ind.value, sign.value)
            try:
                series_list.append(daily_bias_series(panel, ind, sign, _protocol(args, sign), boot))
            except ValueError as exc:
                # an empty branch (e.g. no negative cash flows) is data, not a failure
                print(f"globalbias analyze: warning: {exc}", file=sys.stderr)
                empty.append({"indicator": ind.value, "sign": sign.value, "reason": str(exc)})
    if not series_list:
        raise ValueError("nothing to analyze: " + "; ".join(e["reason"] for e in empty))
    with RunDir(args.out, args.force) as run:
        for s in series_list:
            run.write(f"series_{s.indicator.value}_{s.sign.value}.csv", series_to_csv(s))
        run.write("series.json", dumps({"series": [series_to_dict(s) for s in series_list],
                                        "not_analyzed": empty}))
        run.write("lowest_p.csv", lowest_p_to_csv(series_list))
        run.write("lowest_p.json", dumps(lowest_p_rows(series_list)))
        run.manifest("analyze", _snapshot(args), args.seed, [args.panel], started)
    sys.stdout.write(lowest_p_to_csv(series_list))
    return 0


def _single_section(args):
    panel = load_panel(args.panel)
    if args.indicator is None or "," in args.indicator or args.indicator == "all":
        raise UsageError("--indicator must name a single indicator")
    if args.date is None:
        raise UsageError("--date is required")
    ind = Indicator(args.indicator.upper())
    sign = Sign.ALL if args.sign == "auto" else Sign(args.sign)
    if sign is Sign.ALL and ind.is_cash_flow and args.sign == "auto":
        sign = Sign.POSITIVE
    return panel, cross_section(panel, dt.date.fromisoformat(args.date), ind, _protocol(args, sign))


def cmd_fit(args) -> int:
    started = _now()
    _, section = _single_section(args)
    if section.retained < 50:
        raise ValueError(f"bias-shape fit needs n >= 50 values, section has {section.retained}")
    comparison = fit_bias_shape(section)
    k = min(args.quantiles or 300, section.retained)
    with RunDir(args.out, args.force) as run:
        shape = {
            "date": section.date.isoformat(),
            "indicator": section.indicator.value,
            "sign": section.sign.value,
            "n": section.retained,
            "models": comparison.to_dict(),
        }
        run.write("shape.json", dumps(shape))
        run.write("overlay.csv", overlay_to_csv(overlay_grid(section.values, comparison)))
        run.write("qq.csv", qq_plot_data(section, k).to_csv())
        run.manifest("fit", _snapshot(args), args.seed, [args.panel], started)
    aic = comparison.aic
    for name in ("lognormal", "gpd1", "gpd2"):
        print(f"{name}\tAIC={aic[name]:.4f}")
    return 0


def _flag(raw: dict, key: str, default: bool) -> bool:
    val = raw.get(key)
    if val is None:
        return default
    if val.lower() in ("1", "true", "yes", "on"):
        return True
    if val.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{key}: expected true/false, got {val!r}")


def cmd_simulate(args) -> int:
    started = _now()
    if args.config is None:
        raise UsageError("--config is required")
    raw = parse_flat_config(Path(args.config).read_text(encoding="utf-8"))
    process, cfg = load_process_config(args.config, seed=args.seed)
    values = gibrat_simulate(cfg) if process == "gibrat" else kesten_simulate(cfg)

    report = {"process": process, "n_paths": cfg.n_paths, "steps": cfg.steps}
    if _flag(raw, "hill", process == "kesten"):
        k = int(raw["hill_k"]) if "hill_k" in raw else None
        est = hill_tail_index(values, k)
        report["hill"] = {"index": est.index, "k_used": est.k_used, "stderr": est.stderr}
        if process == "kesten" and cfg.growth.m < 0:
            report["hill"]["kesten_exponent"] = kesten_exponent(cfg.growth.m, cfg.growth.v)
    if _flag(raw, "gof", process == "gibrat"):
        reps = int(raw.get("bootstrap", args.bootstrap))
        report["gof"] = {}
        for i, method in enumerate(ALL_METHODS):
            res = gof_test(values, method, BootstrapConfig(reps, args.seed + i))
            report["gof"][method.value] = {"statistic": res.statistic, "p_value": res.p_value,
                                           "stars": res.stars, "n": res.n}

    with RunDir(args.out, args.force) as run:
        run.write("x_T.csv", "x_T\n" + "".join(f"{v!r}\n" for v in values.tolist()))
        run.write("config.txt", config_to_text(process, cfg))
        run.write("report.json", dumps(report))
        run.manifest("simulate", _snapshot(args), args.seed, [args.config], started)
    print(json.dumps(report, sort_keys=True))
    return 0


def _read_values(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    vals = []
    for i, ln in enumerate(lines, 1):
        if not ln:
            continue
        cell = ln.split(",")[0]
        try:
            vals.append(float(cell))
        except ValueError:
            if i == 1:
                continue  # header
            raise ValueError(f"{path}: line {i}: non-numeric value {cell!r}") from None
    return np.array(vals)


def cmd_gof(args) -> int:
    started = _now()
    if args.input is not None:
        values = _read_values(args.input)
        inputs = [args.input]
        source_size = None
        if args.quantiles:
            source_size = values.size
            values = quantile_subsample(values, args.quantiles)
    elif args.panel is not None:
        _, section = _single_section(args)
        source_size = section.retained
        values = quantile_subsample(section.values, args.quantiles or 300)
        inputs = [args.panel]
    else:
        raise UsageError("gof needs --input or --panel")
    methods = ALL_METHODS if args.method == "all" else (Method(args.method.upper()),)
    rows = []
    for i, method in enumerate(methods):
        r = gof_test(values, method, BootstrapConfig(args.bootstrap, args.seed + i), mode=args.mode,
                     source_size=source_size)
        rows.append({"method": r.method.value, "statistic": r.statistic, "p_value": r.p_value,
                     "stars": r.stars, "n": r.n, "mode": r.mode, "clipped": r.clipped,
                     "fitted_mu": r.fitted.mu, "fitted_sigma": r.fitted.sigma})
    with RunDir(args.out, args.force) as run:
        csv_text = "method,statistic,p_value,stars,n\n" + "".join(
            f"{r['method']},{r['statistic']!r},{r['p_value']!r},{r['stars']},{r['n']}\n" for r in rows)
        run.write("gof.csv", csv_text)
        run.write("gof.json", dumps(rows))
        run.manifest("gof", _snapshot(args), args.seed, inputs, started)
    sys.stdout.write(csv_text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--panel", type=Path, help="long-format panel CSV (date,company,indicator,value)")
    common.add_argument("--out", type=Path, required=True, help="output directory (one per run)")
    common.add_argument("--seed", type=int, help="master seed (required for stochastic commands)")
    common.add_argument("--bootstrap", type=int, default=2000, help="bootstrap replicates per test (>= 100)")
    common.add_argument("--quantiles", type=int, default=None, help="quantile subsample size (>= 10; default 300)")
    common.add_argument("--cap", type=float, default=1000.0, help="keep values with |v| < cap")
    common.add_argument("--sign", default="auto", choices=["auto", "positive", "negative", "all"])
    common.add_argument("--indicator", help="indicator code, comma list, or 'all'")
    common.add_argument("--date", help="cross-section date, YYYY-MM-DD")
    common.add_argument("--force", action="store_true", help="overwrite an existing output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="globalbias", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="daily p-value series and lowest-p table")
    p.set_defaults(func=cmd_analyze, stochastic=True)
    p = sub.add_parser("fit", parents=[common], help="log-normal vs GPD-1 vs GPD-2 on one cross-section")
    p.set_defaults(func=cmd_fit, stochastic=False)
    p = sub.add_parser("simulate", parents=[common], help="Gibrat / Kesten simulation from a config file")
    p.add_argument("--config", type=Path, help="flat 'key = value' process config")
    p.set_defaults(func=cmd_simulate, stochastic=True)
    p = sub.add_parser("gof", parents=[common], help="goodness-of-fit test of one sample")
    p.add_argument("--input", type=Path, help="single-column CSV of positive values")
    p.add_argument("--method", default="all", choices=["all", "KS", "CHI2", "AD", "ks", "chi2", "ad"])
    p.add_argument("--mode", default="bootstrap", choices=["bootstrap", "asymptotic"])
    p.set_defaults(func=cmd_gof, stochastic=True)
    return parser


def _validate(parser, args) -> None:
    if args.stochastic and args.seed is None:
        parser.error(f"{args.command}: --seed is required (explicit-seed policy)")
    if args.seed is not None and args.seed < 0:
        parser.error("--seed must be non-negative")
    if args.quantiles is not None and args.quantiles < 10:
        parser.error(f"--quantiles must be >= 10, got {args.quantiles}")
    if args.bootstrap < 100:
        parser.error(f"--bootstrap must be >= 100, got {args.bootstrap}")
    if not args.cap > 0:
        parser.error(f"--cap must be > 0, got {args.cap}")
    if args.command in ("analyze", "fit") and args.panel is None:
        parser.error(f"{args.command}: --panel is required")
    if args.indicator not in (None, "all"):
        for code in args.indicator.split(","):
            if code.strip().upper() not in Indicator.__members__:
                parser.error(f"unknown indicator {code!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.out.exists() and not args.force:
        print(f"globalbias {args.command}: error: output directory {args.out} exists "
              "(use --force to overwrite)", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"globalbias {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, DegenerateSampleError) as exc:
        print(f"globalbias {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
