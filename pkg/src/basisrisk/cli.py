"""Command-line entry point: ``basisrisk <command> [options]``.

Every command reads explicit input paths, writes one table to ``--out`` (raw
fractions, CSV or JSON) next to a ``<out>.manifest.json`` sidecar, and prints a
human-readable view with percentages to stdout. Exit codes: 0 success,
1 runtime failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from ._parallel import THREADS_ENV
from .indices import score_external, subsample_experiment
from .moments import DENOMINATORS, DegenerateError
from .panel import LEVELS, PanelError, YieldPanel, load_external, load_panel, split_by_zone, subset_by_zone
from .zones import SWEEP_LEVELS, radius_curve, radius_sweep, zonal_sweep
from .evaluation.compare import COLUMNS as COMPARE_COLUMNS, compare_zones
from .evaluation.measurement import MODES, measurement_error_fit
from .evaluation.quantile import QuantileSolverError
from .evaluation.simulation import DEFAULT_HORIZON, SimulationConfig, run_simulation
from .evaluation.utility import DEFAULT_CRRA, DEFAULT_TRIGGER

logger = logging.getLogger("basisrisk")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2

DEFAULT_TAU = 0.3
DEFAULT_SIZES = "10,20,50,100"
DEFAULT_RADII = "50,100,200,500,1000,2000,5000,10000,20000,50000"
PERCENT_COLUMNS = {"r2_bar_opt", "zonal_risk", "mean_r2_bar", "r2_bar", "r2q_bar", "farm_equiv_mean"}


class InputError(Exception):
    """Bad command-line input detected by the CLI itself."""


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _named_path(text: str) -> tuple[str, str]:
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    return name, path


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("output")
    g.add_argument("--out", type=Path, help="output file; a <out>.manifest.json sidecar is written next to it")
    g.add_argument("--format", choices=("csv", "json"), default="csv", help="output file format (default: %(default)s)")
    g.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker threads (default: ${THREADS_ENV} or 1); results do not depend on it",
    )
    g.add_argument("--seed", type=int, default=0, help="random seed (default: %(default)s)")
    g.add_argument("-q", "--quiet", action="store_true", help="do not print the table to stdout")


def _yields(p: argparse.ArgumentParser) -> None:
    p.add_argument("--yields", type=Path, required=True, help="yield CSV: field_id,period,yield[,lon,lat,zone_l1,zone_l2,zone_l3]")
    p.add_argument(
        "--filter-policy",
        choices=("reject", "drop_incomplete_fields"),
        default="reject",
        help="how to treat fields with missing periods (default: %(default)s)",
    )


def _level(p: argparse.ArgumentParser, default: str = "L3") -> None:
    p.add_argument(
        "--level",
        choices=SWEEP_LEVELS,
        default=default,
        help="zone level defining the evaluation zones; L0 = whole panel (default: %(default)s)",
    )


def _metric(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--metric",
        choices=("avg", "total"),
        default="avg",
        help="avg = unweighted mean field R2, total = variance-weighted (default: %(default)s)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basisrisk",
        description="Zonal and design basis risk of index insurance on field-level yield panels.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("zonal", help="zonal risk per administrative level", formatter_class=fmt)
    _yields(p)
    p.add_argument("--levels", type=_str_list, default=None, help="comma-separated levels; default: L0 plus every populated level")
    _metric(p)
    p.add_argument("--denominator", choices=DENOMINATORS, default="T-1", help="variance denominator")
    p.add_argument("--areas", type=Path, help="CSV level,zone_id,area_km2 adding an area column")
    p.add_argument("--by-zone", action="store_true", help="emit one row per zone instead of per-level averages")
    _common(p)
    p.set_defaults(func=cmd_zonal)

    p = sub.add_parser("design", help="design risk of zone-mean and external indices", formatter_class=fmt)
    _yields(p)
    _level(p)
    p.add_argument("--external", type=_named_path, action="append", default=[], metavar="NAME=PATH",
                   help="external index CSV zone_id,period,value[,subperiod]; repeatable")
    p.add_argument("--window", type=_str_list, default=None, help="comma-separated subperiods kept before aggregation")
    p.add_argument("--agg", choices=("mean", "sum"), default="mean", help="aggregation of subperiods within a period")
    _metric(p)
    _common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("radius", help="zonal R2 in circles of growing radius around each field", formatter_class=fmt)
    _yields(p)
    p.add_argument("--radii", type=_float_list, default=DEFAULT_RADII, help="comma-separated radii in meters")
    p.add_argument("--exclusion", type=float, default=50.0, help="exclusion ring around the center in meters")
    p.add_argument("--min-fields", type=int, default=10, help="skip neighborhoods with fewer fields")
    _metric(p)
    p.add_argument("--curve", action="store_true", help="emit the mean curve per (exclusion, radius) instead of per-field rows")
    _common(p)
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("experiment", help="R2 of random subsample-mean indices", formatter_class=fmt)
    _yields(p)
    p.add_argument("--zone", metavar="LEVEL=ID", type=_named_path, help="restrict to one zone, e.g. L3=w1")
    p.add_argument("--sizes", type=_int_list, default=DEFAULT_SIZES, help="comma-separated subsample sizes")
    p.add_argument("--replications", type=int, default=200, help="replications per size")
    _common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("simulate", help="long synthetic yield histories fitted zone by zone", formatter_class=fmt)
    _yields(p)
    _level(p, "L0")
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, help="simulated years")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eu", help="linear, quantile and expected-utility metrics of the zone-mean index", formatter_class=fmt)
    _yields(p)
    _level(p)
    p.add_argument("--trigger", type=float, default=DEFAULT_TRIGGER, help="indemnity trigger as a share of the mean")
    p.add_argument("--crra", type=float, default=DEFAULT_CRRA, help="relative risk aversion")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="quantile for the pseudo R2")
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, help="simulated years per zone; 0 uses the observed data")
    _common(p)
    p.set_defaults(func=cmd_eu)

    p = sub.add_parser("quantile", help="linear vs quantile R2 of the zone-mean index", formatter_class=fmt)
    _yields(p)
    _level(p)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="quantile for the pseudo R2")
    p.add_argument("--horizon", type=int, default=0, help="simulated years per zone; 0 uses the observed data")
    _common(p)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("measure", help="measurement-error regressions of predicted on ground-truth yields", formatter_class=fmt)
    p.add_argument("--truth", type=Path, required=True, help="ground-truth yield CSV (field_id = unit)")
    p.add_argument("--pred", type=Path, required=True, help="predicted yield CSV with the same layout")
    p.add_argument("--modes", type=_str_list, default=",".join(MODES), help="comma-separated subset of pooled,temporal,spatial")
    _common(p)
    p.set_defaults(func=cmd_measure)
    return parser


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _json_value(v):
    if v is None or v is pd.NA:
        return None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return None if math.isnan(v) else float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(df: pd.DataFrame, fmt: str) -> str:
    """Serialize a result table; floats keep full round-trip precision."""
    if fmt == "json":
        records = [{k: _json_value(v) for k, v in row.items()} for row in df.to_dict(orient="records")]
        return json.dumps(records, indent=1) + "\n"
    return df.to_csv(index=False, lineterminator="\n")


def display(df: pd.DataFrame) -> str:
    """Table for the terminal: R² style columns as percentages with one decimal."""
    view = df.copy()
    for c in view.columns:
        if c in PERCENT_COLUMNS:
            view[c] = [("" if pd.isna(v) else f"{100 * v:.1f}") for v in view[c]]
        elif view[c].dtype.kind == "f":
            view[c] = [("" if pd.isna(v) else f"{v:.3f}") for v in view[c]]
    return view.to_string(index=False)


def emit(df: pd.DataFrame, args, inputs: list[Path], started: float, shown: pd.DataFrame | None = None) -> None:
    if args.out is not None:
        text = render(df, args.format)
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
        manifest = {
            "command": args.command,
            "argv": args.argv,
            "inputs": {str(p): _sha256(p) for p in inputs},
            "seed": args.seed,
            "version": __version__,
            "output_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            "wall_time_s": round(time.perf_counter() - started, 6),
        }
        Path(f"{args.out}.manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    if not args.quiet:
        print(display(df if shown is None else shown))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _panel(args) -> YieldPanel:
    panel = load_panel(args.yields, filter_policy=args.filter_policy)
    if panel.dropped:
        logger.warning("dropped %d incomplete field(s)", len(panel.dropped))
    return panel


def _zones(panel: YieldPanel, level: str) -> dict[str, YieldPanel]:
    return split_by_zone(panel, level)


def _read_areas(path: Path) -> dict[tuple[str, str], float]:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in ("level", "zone_id", "area_km2") if c not in df.columns]
    if missing:
        raise InputError(f"{path}: missing column(s) {missing}")
    try:
        return {(lvl, z): float(a) for lvl, z, a in zip(df["level"], df["zone_id"], df["area_km2"])}
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric area_km2 ({exc})") from None


def cmd_zonal(args, started: float) -> None:
    panel = _panel(args)
    levels = args.levels or ["L0"] + [lvl for lvl in LEVELS if panel.has_level(lvl)]
    if args.denominator != "T-1":
        # the share is scale-free; the flag only matters for the weights
        logger.info("denominator %s does not change the eigenvalue share", args.denominator)
    areas = _read_areas(args.areas) if args.areas else None
    sweep = zonal_sweep(panel, levels, args.metric, areas, args.threads)
    if args.by_zone:
        df = sweep.rows_frame()
        if areas is None:
            df = df.drop(columns="area_km2")
    else:
        df = sweep.summary
        if areas is None:
            df = df.drop(columns="area_km2")
    inputs = [args.yields] + ([args.areas] if args.areas else [])
    emit(df, args, inputs, started)


def cmd_design(args, started: float) -> None:
    panel = _panel(args)
    zones = _zones(panel, args.level)
    series = {}
    for name, path in args.external:
        if name in ("optimal", "zone_mean"):
            raise InputError(f"external index name {name!r} is reserved")
        by_zone = load_external(path, panel.periods, args.window, args.agg)
        unknown = sorted(set(by_zone) - set(zones))
        if unknown:
            raise InputError(f"{path}: zone id(s) not in the yield panel at {args.level}: {', '.join(unknown)}")
        series[name] = by_zone
    report = score_external(zones, series, args.metric, args.threads)
    for row in report.rows:
        if row.missing_zones:
            logger.warning("%s: %d zone(s) without a usable series", row.index, len(row.missing_zones))
    emit(report.to_frame(), args, [args.yields] + [Path(p) for _, p in args.external], started)


def cmd_radius(args, started: float) -> None:
    panel = _panel(args)
    sweep = radius_sweep(panel, args.radii, args.exclusion, args.min_fields, args.metric, args.threads)
    rows = sweep[["field_id", "radius", "exclusion", "n_fields", "r2_bar_opt"]]
    curve = radius_curve(sweep)
    emit(curve if args.curve else rows, args, [args.yields], started, shown=curve)


def cmd_experiment(args, started: float) -> None:
    panel = _panel(args)
    if args.zone:
        level, zone_id = args.zone
        if level not in LEVELS:
            raise InputError(f"--zone level must be one of {LEVELS}, got {level!r}")
        panel = subset_by_zone(panel, level, zone_id)
    df = subsample_experiment(panel, args.sizes, args.replications, args.seed, args.threads)
    shown = df.groupby(["kind", "size"], sort=False, dropna=False)["r2_bar"].agg(["mean", "count"]).reset_index()
    shown.columns = ["kind", "size", "r2_bar", "n_rows"]
    emit(df, args, [args.yields], started, shown=shown)


def _simulated_frame(panel: YieldPanel, sims: dict[str, YieldPanel]) -> pd.DataFrame:
    by_id = {fid: (sp, k) for sp in sims.values() for k, fid in enumerate(sp.field_ids)}
    rows = []
    for f in panel.fields:
        sp, k = by_id[f.field_id]
        extra = {}
        if f.has_coords:
            extra.update(lon=f.lon, lat=f.lat)
        for lvl in LEVELS:
            z = f.zone(lvl)
            if z is not None:
                extra[f"zone_{lvl.lower()}"] = z
        for p, y in zip(sp.periods, sp.values[k]):
            rows.append({"field_id": f.field_id, "period": p, "yield": float(y), **extra})
    return pd.DataFrame(rows)


def cmd_simulate(args, started: float) -> None:
    panel = _panel(args)
    sims, rates = {}, []
    for k, (z, zp) in enumerate(_zones(panel, args.level).items()):
        res = run_simulation(zp, SimulationConfig.from_panel(zp, args.horizon, args.seed + k))
        sims[z] = res.panel
        rates.append({"zone_id": z, "n_fields": zp.n, "truncation_rate": res.truncation_rate})
    df = _simulated_frame(panel, sims)
    emit(df, args, [args.yields], started, shown=pd.DataFrame(rates))


def _compare(args, started: float, eu: bool) -> None:
    panel = _panel(args)
    zones = _zones(panel, args.level)
    df = compare_zones(
        zones,
        threads=args.threads,
        tau=args.tau,
        trigger=getattr(args, "trigger", DEFAULT_TRIGGER),
        crra_coef=getattr(args, "crra", DEFAULT_CRRA),
        horizon=args.horizon or None,
        rng_seed=args.seed,
        eu=eu,
    )
    shown = df[COMPARE_COLUMNS[:4] + ["n_fields"]]
    if len(df) > 1:
        ok = df[["r2_bar", "r2q_bar"]].dropna()
        if len(ok) > 1:
            print(f"cross-zone correlation r2_bar vs r2q_bar: {np.corrcoef(ok['r2_bar'], ok['r2q_bar'])[0, 1]:.3f}",
                  file=sys.stderr)
    emit(df, args, [args.yields], started, shown=shown)


def cmd_eu(args, started: float) -> None:
    _compare(args, started, eu=True)


def cmd_quantile(args, started: float) -> None:
    _compare(args, started, eu=False)


def cmd_measure(args, started: float) -> None:
    bad = [m for m in args.modes if m not in MODES]
    if bad:
        raise InputError(f"unknown mode(s) {bad}; expected a subset of {MODES}")
    truth = load_panel(args.truth)
    pred = load_panel(args.pred)
    rows = []
    for mode in args.modes:
        fit = measurement_error_fit(truth, pred, mode)
        rows.append(
            {
                "mode": mode,
                "cor": fit.rho,
                "gamma": fit.gamma,
                "p_gamma_eq_1": fit.p_gamma_eq_1,
                "se_gamma": fit.se_gamma,
                "n_obs": fit.n_obs,
                "n_groups": fit.n_groups,
            }
        )
    emit(pd.DataFrame(rows), args, [args.truth, args.pred], started)


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    started = time.perf_counter()
    try:
        args.func(args, started)
    except (InputError, PanelError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateError, QuantileSolverError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        logger.debug("unhandled", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
