"""Batch command line: CSV ingestion, analysis subcommands, CSV/SVG/manifest
emission.

Every run writes ``<name>.csv``, ``<name>.svg``, and ``manifest.json``
(UTF-8, LF) into the output directory; reruns with the same configuration and
seed are byte-identical. Curve CSVs serialize floats with their shortest
round-tripping representation and render infinite sentinels as the literal
tokens ``-inf`` / ``+inf``, so re-ingesting a curve reproduces it exactly.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
degeneracy.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._svg import render_svg
from .bootstrap import BootstrapConfig, assign_policy, bootstrap_frontier, bootstrap_marginal_frontier
from .bounds import (
    apparent_pair,
    derived_bounds,
    global_bounds_curve,
    qbf,
    sharpness_diagnostic,
)
from .errors import ConfigError, DataError, DegeneracyError, QbfError
from .marginal import indifference_pmf, marginal_qbf
from .sample import PolicySpec, Sample, require_valid
from .stepcdf import ecdf_from_values
from .synthetic import DgpSpec, coverage_study, generate_dgp, resolve_workers

EXIT_CODES = {ConfigError: 2, DataError: 3, DegeneracyError: 4}


# ---------------------------------------------------------------------------
# ingestion and serialization
# ---------------------------------------------------------------------------

def ingest_csv(path, y_col="y", d_col="d", x_cols=(), z_col=None):
    """Parse a headered CSV into a Sample (and the z column when requested).

    y parses as a real, d strictly as 0/1, covariates as integer codes. A
    missing or malformed field aborts with PARSE_ERROR naming the 1-based
    data row and the column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("PARSE_ERROR", f"{path}: empty file") from None
        rows = list(reader)
    positions = {}
    needed = [y_col, d_col, *x_cols] + ([z_col] if z_col else [])
    for col in needed:
        if col not in header:
            raise DataError("MISSING_COLUMN", f"column {col!r} not found in {path}")
        positions[col] = header.index(col)

    def field(row_values, row_number, col):
        pos = positions[col]
        if pos >= len(row_values) or row_values[pos].strip() == "":
            raise DataError("PARSE_ERROR", f"row {row_number}, column {col!r}: missing value")
        return row_values[pos].strip()

    y, d, x, z = [], [], [], []
    for i, row in enumerate(rows, start=1):
        if not row:
            continue
        try:
            y.append(float(field(row, i, y_col)))
        except ValueError:
            raise DataError("PARSE_ERROR", f"row {i}, column {y_col!r}: not a real number") from None
        raw_d = field(row, i, d_col)
        if raw_d not in ("0", "1"):
            raise DataError("PARSE_ERROR", f"row {i}, column {d_col!r}: expected 0 or 1, got {raw_d!r}")
        d.append(int(raw_d))
        cells = []
        for col in x_cols:
            raw = field(row, i, col)
            try:
                cells.append(int(raw))
            except ValueError:
                raise DataError(
                    "PARSE_ERROR", f"row {i}, column {col!r}: expected an integer code, got {raw!r}"
                ) from None
        x.append(cells)
        if z_col:
            try:
                z.append(float(field(row, i, z_col)))
            except ValueError:
                raise DataError("PARSE_ERROR", f"row {i}, column {z_col!r}: not a real number") from None
    sample = Sample(y, d, np.asarray(x, dtype=np.int64).reshape(len(y), len(x_cols)))
    return sample, (np.asarray(z) if z_col else None)


def format_value(value) -> str:
    """Shortest exact form; infinite sentinels become -inf / +inf tokens."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return repr(value)


def parse_value(token: str):
    if token == "+inf":
        return math.inf
    if token == "-inf":
        return -math.inf
    try:
        return float(token)
    except ValueError:
        return token


def write_curve_csv(path, header, columns) -> None:
    lines = [",".join(header)]
    length = len(columns[header[0]])
    for i in range(length):
        lines.append(",".join(format_value(columns[col][i]) for col in header))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve_csv(path):
    """Inverse of write_curve_csv: returns (header, column dict)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [line for line in fh.read().split("\n") if line]
    header = lines[0].split(",")
    columns = {col: [] for col in header}
    for line in lines[1:]:
        for col, token in zip(header, line.split(",")):
            columns[col].append(parse_value(token))
    return header, columns


def _write_text(path, text) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_manifest(out_dir, subcommand, config, outputs) -> None:
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": config.get("seed"),
        "config": config,
        "outputs": outputs,
    }
    _write_text(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
    )


def _emit(args, header, columns, svg, config) -> int:
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    name = args.name or args.subcommand
    outputs = [f"{name}.csv", f"{name}.svg"]
    write_curve_csv(os.path.join(out_dir, f"{name}.csv"), header, columns)
    _write_text(os.path.join(out_dir, f"{name}.svg"), svg)
    if getattr(args, "json", False):
        mirror = {col: [format_value(v) for v in columns[col]] for col in header}
        _write_text(
            os.path.join(out_dir, f"{name}.json"),
            json.dumps({"columns": mirror, "header": header}, sort_keys=True, indent=2) + "\n",
        )
        outputs.append(f"{name}.json")
    _write_manifest(out_dir, args.subcommand, config, outputs)
    return 0


# ---------------------------------------------------------------------------
# shared argument plumbing
# ---------------------------------------------------------------------------

def _config_dict(args) -> dict:
    # out_dir only places the artifacts; dropping it keeps manifests
    # identical across reruns into different directories
    skip = {"func", "subcommand", "out_dir"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _parse_list(text, kind=float):
    return [kind(tok) for tok in text.split(",") if tok.strip() != ""]


def _tau_grid(args, delta) -> np.ndarray:
    if args.taus:
        return np.asarray(_parse_list(args.taus), dtype=np.float64)
    lo = args.tau_min if args.tau_min is not None else max(delta + 0.01, 0.15)
    hi = args.tau_max if args.tau_max is not None else min(1.0 - delta - 0.01, 0.85)
    if not lo < hi:
        raise ConfigError("TAU_GRID_EMPTY", f"empty tau grid [{lo}, {hi}]")
    return np.linspace(lo, hi, args.tau_points)


def _load_sample(args):
    x_cols = _parse_list(args.x_cols, str) if args.x_cols else []
    sample, z = ingest_csv(args.input, args.y_col, args.d_col, x_cols, args.z_col)
    require_valid(sample)
    return sample, z


def _pipeline(args):
    sample, z = _load_sample(args)
    policy = PolicySpec(args.policy, args.delta, z_source=args.z_col or "y")
    assignment = assign_policy(sample, policy, z, seed=(args.seed, 0, 1))
    pair = apparent_pair(sample, assignment)
    f_y = ecdf_from_values(sample.y, 1.0)
    return sample, z, policy, pair, f_y


def _add_data_args(p) -> None:
    p.add_argument("--input", required=True, help="input CSV with a header row")
    p.add_argument("--y-col", default="y", help="outcome column (default: y)")
    p.add_argument("--d-col", default="d", help="0/1 treatment column (default: d)")
    p.add_argument("--x-cols", default="", help="comma-separated covariate columns")
    p.add_argument("--z-col", default=None, help="ranking column for threshold policies (default: outcome)")


def _add_policy_args(p) -> None:
    p.add_argument("--policy", choices=("threshold", "randomized"), default="threshold")
    p.add_argument("--delta", type=float, default=0.1, help="treated-share expansion")


def _add_grid_args(p) -> None:
    p.add_argument("--taus", default=None, help="explicit comma-separated tau grid")
    p.add_argument("--tau-min", type=float, default=None)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--tau-points", type=int, default=71)


def _add_out_args(p) -> None:
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--name", default=None, help="output base name (default: subcommand)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="also write a JSON mirror of the CSV")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_frontier(args) -> int:
    _, _, _, pair, f_y = _pipeline(args)
    taus = _tau_grid(args, args.delta)
    curve = qbf(pair, f_y, taus, args.g, args.side)
    columns = {"tau": curve.taus, "c_raw": curve.c_values, "c_clamped": curve.clamped}
    svg = render_svg(
        f"Breakdown frontier (delta={args.delta}, g={args.g}, {args.side} conclusion)",
        "tau",
        "c",
        [("c_raw", curve.taus, curve.c_values), ("c_clamped", curve.taus, curve.clamped)],
    )
    return _emit(args, ["tau", "c_raw", "c_clamped"], columns, svg, _config_dict(args))


def _cmd_bounds(args) -> int:
    _, _, _, pair, f_y = _pipeline(args)
    taus = _tau_grid(args, args.delta)
    curve = global_bounds_curve(pair, f_y, taus, args.c)
    columns = {"tau": curve.taus, "lower": curve.lower, "upper": curve.upper}
    svg = render_svg(
        f"Global effect bounds (delta={args.delta}, c={args.c})",
        "tau",
        "quantile effect",
        [("lower", curve.taus, curve.lower), ("upper", curve.taus, curve.upper)],
    )
    return _emit(args, ["tau", "lower", "upper"], columns, svg, _config_dict(args))


def _cmd_derived_bounds(args) -> int:
    _, _, _, pair, f_y = _pipeline(args)
    taus = _tau_grid(args, args.delta)
    curve = derived_bounds(pair, f_y, args.tau_star, args.g, taus)
    diagnostic = sharpness_diagnostic(pair, f_y, args.tau_star, curve.c)
    n = taus.size
    columns = {
        "tau": curve.taus,
        "lower": curve.lower,
        "upper": curve.upper,
        "c_tilde": [curve.c] * n,
        "diagnostic": [diagnostic.value] * n,
    }
    svg = render_svg(
        f"Derived bounds (tau*={args.tau_star}, g={args.g}, c~={curve.c:.4g}, {diagnostic.value})",
        "tau",
        "quantile effect",
        [("lower", curve.taus, curve.lower), ("upper", curve.taus, curve.upper)],
    )
    config = _config_dict(args)
    config["c_tilde"] = curve.c
    config["diagnostic"] = diagnostic.value
    return _emit(args, ["tau", "lower", "upper", "c_tilde", "diagnostic"], columns, svg, config)


def _cmd_marginal_frontier(args) -> int:
    sample, _ = _load_sample(args)
    taus = _tau_grid(args, 0.0)
    curve = marginal_qbf(sample, indifference_pmf(sample, args.alpha), taus)
    columns = {"tau": curve.taus, "c_raw": curve.c_values, "c_clamped": curve.clamped}
    svg = render_svg(
        f"Marginal-effect breakdown frontier (alpha={args.alpha})",
        "tau",
        "c",
        [("c_raw", curve.taus, curve.c_values), ("c_clamped", curve.taus, curve.clamped)],
    )
    config = _config_dict(args)
    config["misspecification_risk"] = bool(args.alpha != 1.0)
    return _emit(args, ["tau", "c_raw", "c_clamped"], columns, svg, config)


def _cmd_bootstrap(args) -> int:
    sample, z = _load_sample(args)
    cfg = BootstrapConfig(
        replications=args.replications,
        level=args.level,
        seed=args.seed,
        freeze_assignment=args.freeze_assignment,
    )
    if args.statistic == "frontier":
        taus = _tau_grid(args, args.delta)
        policy = PolicySpec(args.policy, args.delta, z_source=args.z_col or "y")
        band = bootstrap_frontier(sample, policy, args.g, args.side, taus, cfg, z=z)
        title = f"Frontier bootstrap band ({int(args.level * 100)}% pointwise, B={args.replications})"
    else:
        taus = _tau_grid(args, 0.0)
        band = bootstrap_marginal_frontier(sample, args.alpha, taus, cfg)
        title = f"Marginal frontier bootstrap band ({int(args.level * 100)}%, B={args.replications})"
    columns = {"tau": band.taus, "point": band.point, "lo": band.lo, "hi": band.hi}
    svg = render_svg(
        title,
        "tau",
        "c",
        [("point", band.taus, band.point)],
        bands=[(band.taus, band.lo, band.hi)],
    )
    config = _config_dict(args)
    config["failed_replicates"] = band.failures
    return _emit(args, ["tau", "point", "lo", "hi"], columns, svg, config)


def _cmd_simulate(args) -> int:
    spec = DgpSpec(
        n=args.n,
        rho_sel=args.rho_sel,
        effect=args.effect,
        x_probs=tuple(_parse_list(args.x_probs)),
        x_shift=args.x_shift,
        seed=args.seed,
    )
    sample = generate_dgp(spec)
    k = sample.x.shape[1]
    header = ["y", "d"] + [f"x{j}" for j in range(k)]
    columns = {"y": sample.y, "d": [int(v) for v in sample.d]}
    for j in range(k):
        columns[f"x{j}"] = [int(v) for v in sample.x[:, j]]
    treated = ecdf_from_values(sample.y[sample.d == 1], 1.0)
    control = ecdf_from_values(sample.y[sample.d == 0], 1.0)
    svg = render_svg(
        f"Synthetic outcome ECDFs by arm (n={args.n})",
        "y",
        "F(y)",
        [("treated", treated.support, treated.cum), ("control", control.support, control.cum)],
    )
    return _emit(args, header, columns, svg, _config_dict(args))


def _cmd_coverage(args) -> int:
    spec = DgpSpec(
        n=args.n_data,
        rho_sel=args.rho_sel,
        effect=args.effect,
        x_probs=tuple(_parse_list(args.x_probs)),
        x_shift=args.x_shift,
        seed=args.seed,
    )
    policy = PolicySpec(args.policy, args.delta)
    taus = _tau_grid(args, args.delta)
    table = coverage_study(
        spec,
        policy,
        args.g,
        taus,
        n_data=args.n_data,
        replications=args.replications,
        mc_reps=args.mc_reps,
        seed=args.seed,
        level=args.level,
        oracle_n=args.oracle_n,
        workers=args.workers,
    )
    columns = {
        "tau": [row.tau for row in table.rows],
        "coverage": [row.coverage for row in table.rows],
        "mc_se": [row.mc_se for row in table.rows],
        "median_width": [row.median_width for row in table.rows],
    }
    svg = render_svg(
        f"Band coverage of the oracle frontier (n={args.n_data}, B={args.replications}, M={args.mc_reps})",
        "tau",
        "coverage",
        [
            ("coverage", columns["tau"], columns["coverage"]),
            ("nominal", columns["tau"], [args.level] * len(table.rows)),
        ],
    )
    config = _config_dict(args)
    config["workers"] = resolve_workers(args.workers)
    return _emit(args, ["tau", "coverage", "mc_se", "median_width"], columns, svg, config)


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbf",
        description="Sharp bounds and breakdown frontiers for quantile effects "
        "of treatment-expansion policies",
    )
    parser.add_argument("--version", action="version", version=f"qbf {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("frontier", help="breakdown frontier curve")
    _add_data_args(p), _add_policy_args(p), _add_grid_args(p), _add_out_args(p)
    p.add_argument("--g", type=float, default=0.1, help="conclusion threshold")
    p.add_argument("--side", choices=("lower", "upper"), default="lower")
    p.set_defaults(func=_cmd_frontier)

    p = sub.add_parser("bounds", help="sharp global-effect bounds at a bias budget c")
    _add_data_args(p), _add_policy_args(p), _add_grid_args(p), _add_out_args(p)
    p.add_argument("--c", type=float, default=0.0, help="selection-bias budget in [0, 1]")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("derived-bounds", help="bounds at the clamped frontier value of tau*")
    _add_data_args(p), _add_policy_args(p), _add_grid_args(p), _add_out_args(p)
    p.add_argument("--g", type=float, default=0.1)
    p.add_argument("--tau-star", type=float, default=0.3)
    p.set_defaults(func=_cmd_derived_bounds)

    p = sub.add_parser("marginal-frontier", help="marginal-effect breakdown frontier")
    _add_data_args(p), _add_grid_args(p), _add_out_args(p)
    p.add_argument("--alpha", type=float, default=1.0, help="indifference-margin mixture weight")
    p.set_defaults(func=_cmd_marginal_frontier)

    p = sub.add_parser("bootstrap", help="pointwise percentile bands for a frontier")
    _add_data_args(p), _add_policy_args(p), _add_grid_args(p), _add_out_args(p)
    p.add_argument("--statistic", choices=("frontier", "marginal"), default="frontier")
    p.add_argument("--g", type=float, default=0.1)
    p.add_argument("--side", choices=("lower", "upper"), default="lower")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--freeze-assignment", action="store_true",
                   help="resample the original assignment instead of re-running the policy")
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("simulate", help="write a synthetic dataset CSV")
    _add_out_args(p)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--rho-sel", type=float, default=0.5)
    p.add_argument("--effect", type=float, default=0.4)
    p.add_argument("--x-probs", default="0.5,0.5")
    p.add_argument("--x-shift", type=float, default=0.5)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study of the bootstrap bands")
    _add_grid_args(p), _add_out_args(p)
    p.add_argument("--policy", choices=("threshold", "randomized"), default="threshold")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--g", type=float, default=0.1)
    p.add_argument("--rho-sel", type=float, default=0.5)
    p.add_argument("--effect", type=float, default=0.4)
    p.add_argument("--x-probs", default="0.5,0.5")
    p.add_argument("--x-shift", type=float, default=0.5)
    p.add_argument("--n-data", type=int, default=2000)
    p.add_argument("--replications", type=int, default=200)
    p.add_argument("--mc-reps", type=int, default=300)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--oracle-n", type=int, default=10**6)
    p.add_argument("--workers", type=int, default=None, help="overrides QBF_THREADS")
    p.set_defaults(func=_cmd_coverage)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QbfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for klass, code in EXIT_CODES.items():
            if isinstance(exc, klass):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
