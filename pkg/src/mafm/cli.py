"""Command-line front end: config parsing, panel I/O, subcommand dispatch.

Subcommands: simulate | fit | infer | experiment | forecast | rank. Every
run writes a manifest recording the command, a digest of the resolved
configuration, the seed, and the produced files. All output files are
written atomically (temp file + rename). The canonical panel format is a
long CSV with header t,row,col,value; a directory of wide per-time-slice
CSVs listed in a manifest.json is accepted too.

Exit codes: 0 ok, 2 config error, 3 I/O error, 4 degenerate signal,
5 ill-conditioned inference, 6 every experiment cell failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .estimate import (
    DegenerateSignalError,
    compas,
    compas_partial,
    fit_from_bases,
    fitted_values,
    mine,
)
from .experiments import (
    ExperimentGrid,
    run_coverage_experiment,
    run_error_experiment,
    run_normality_experiment,
)
from .infer import IllConditionedInferenceError, loading_row_ci
from .linalg import Basis
from .pipeline import (
    PanelSpec,
    forecast_expanding,
    insample_stats,
    preprocess,
    rank_diagnostics,
)
from .synth import SimConfig, simulate

__all__ = ["main", "ConfigError"]

log = logging.getLogger("mafm")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4
EXIT_ILL_CONDITIONED = 5
EXIT_ALL_FAILED = 6

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration file or command-line arguments."""


# ---------------------------------------------------------------------------
# File helpers


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv_atomic(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _write_text_atomic(path, buf.getvalue())


def _write_json_atomic(path: Path, doc: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    _write_text_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")


def write_panel_csv(path: Path, x: np.ndarray) -> None:
    n, d1, d2 = x.shape
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "row", "col", "value"])
    for t in range(n):
        for i in range(d1):
            for j in range(d2):
                writer.writerow([t, i, j, repr(float(x[t, i, j]))])
    _write_text_atomic(path, buf.getvalue())


def _axis_order(labels: set[str]) -> list[str]:
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


def read_panel_csv(path: str) -> np.ndarray:
    """Dense (n, d1, d2) array from a long t,row,col,value CSV.

    Axis values may be integers or strings; integer-like axes sort
    numerically, anything else lexically (ISO dates order correctly).
    """
    entries: dict[tuple[str, str, str], float] = {}
    try:
        handle = open(path, newline="")
    except OSError:
        raise
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "row", "col", "value"]:
            raise ConfigError(
                f"{path}: expected header 't,row,col,value', got {header}"
            )
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 4:
                raise ConfigError(
                    f"{path}:{lineno}: expected 4 fields, got {len(fields)}"
                )
            t, row, col, value = (f.strip() for f in fields)
            try:
                entries[(t, row, col)] = float(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: non-numeric value {value!r}")
    if not entries:
        raise ConfigError(f"{path}: no data rows")
    ts = _axis_order({k[0] for k in entries})
    rows = _axis_order({k[1] for k in entries})
    cols = _axis_order({k[2] for k in entries})
    x = np.full((len(ts), len(rows), len(cols)), np.nan)
    t_idx = {t: k for k, t in enumerate(ts)}
    r_idx = {r: k for k, r in enumerate(rows)}
    c_idx = {c: k for k, c in enumerate(cols)}
    for (t, r, c), v in entries.items():
        x[t_idx[t], r_idx[r], c_idx[c]] = v
    if np.isnan(x).any():
        raise ConfigError(
            f"{path}: panel is not balanced; "
            f"{int(np.isnan(x).sum())} (t,row,col) cells are missing"
        )
    return x


def read_panel_dir(path: str) -> np.ndarray:
    """Panel from a directory of wide per-slice CSVs listed in manifest.json."""
    manifest_path = Path(path) / "manifest.json"
    manifest = _load_json(str(manifest_path))
    slices = manifest.get("slices")
    if not isinstance(slices, list) or not slices:
        raise ConfigError(f"{manifest_path}: expected a nonempty 'slices' list")
    mats = []
    for name in slices:
        mat = np.loadtxt(Path(path) / name, delimiter=",", ndmin=2)
        mats.append(mat)
        if mat.shape != mats[0].shape:
            raise ConfigError(
                f"{path}/{name}: slice shape {mat.shape} != {mats[0].shape}"
            )
    return np.stack(mats)


def read_panel(path: str) -> np.ndarray:
    if Path(path).is_dir():
        return read_panel_dir(path)
    return read_panel_csv(path)


def write_matrix_csv(path: Path, m: np.ndarray) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(m):
        writer.writerow([repr(float(v)) for v in row])
    _write_text_atomic(path, buf.getvalue())


def read_matrix_csv(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def write_series_csv(path: Path, series: np.ndarray) -> None:
    """(n, p, r) stack in long t,row,col,value format."""
    write_panel_csv(path, series)


def _config_digest(doc) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config_doc, seed,
                    outputs: list[str], started: float, **extra) -> None:
    _write_json_atomic(
        out_dir / "manifest.json",
        {
            "command": command,
            "config_digest": _config_digest(config_doc),
            "seed": seed,
            "tool_version": __version__,
            "wall_time_s": time.time() - started,
            "outputs": sorted(outputs),
            **extra,
        },
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args) -> int:
    started = time.time()
    doc = _load_json(args.config)
    try:
        if args.seed is not None:
            doc["seed"] = args.seed
        cfg = SimConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{args.config}: {exc}")
    out = _out_dir(args)
    x, truth = simulate(cfg)
    write_panel_csv(out / "panel.csv", x)
    write_matrix_csv(out / "truth_loading_a.csv", truth.a)
    write_matrix_csv(out / "truth_loading_b.csv", truth.b)
    write_series_csv(out / "truth_factors_f.csv", truth.f)
    write_series_csv(out / "truth_factors_g.csv", truth.g)
    outputs = [
        "panel.csv",
        "truth_loading_a.csv",
        "truth_loading_b.csv",
        "truth_factors_f.csv",
        "truth_factors_g.csv",
    ]
    _write_manifest(out, "simulate", cfg.to_dict(), cfg.seed, outputs, started)
    log.info("simulate: wrote %d files to %s", len(outputs) + 1, out)
    return EXIT_OK


def _parse_ranks(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--ranks expects 'r1,r2', got {text!r}")
    try:
        r1, r2 = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--ranks expects integers, got {text!r}")
    return r1, r2


def cmd_fit(args) -> int:
    started = time.time()
    r1, r2 = _parse_ranks(args.ranks)
    x = read_panel(args.data)
    out = _out_dir(args)
    try:
        init = mine(x, r1, r2)
        if args.method == "mine":
            fit = fit_from_bases(x, *init)
        elif args.method == "pcompas":
            if args.s1 is None or args.s2 is None:
                raise ConfigError("--method pcompas requires --s1 and --s2")
            fit = compas_partial(x, r1, r2, args.s1, args.s2, init,
                                 eps=args.eps, max_iter=args.t0)
        else:
            fit = compas(x, r1, r2, init, eps=args.eps, max_iter=args.t0)
    except DegenerateSignalError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))
    write_matrix_csv(out / "loading_a.csv", fit.u_a.cols)
    write_matrix_csv(out / "loading_b.csv", fit.u_b.cols)
    write_series_csv(out / "factors_f.csv", fit.f)
    write_series_csv(out / "factors_g.csv", fit.g)
    _write_csv_atomic(
        out / "trace.csv",
        ["iteration", "delta_b", "delta_a"],
        [(k + 1, db, da) for k, (db, da) in enumerate(fit.trace)],
    )
    r2_stat, fit_err = insample_stats(x, fitted_values(x, fit.u_a, fit.u_b))
    _write_json_atomic(
        out / "stats.json",
        {
            "r1": r1,
            "r2": r2,
            "method": args.method,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "r_squared": r2_stat,
            "fit_err": fit_err,
        },
    )
    config_doc = {
        "data": str(args.data),
        "ranks": [r1, r2],
        "method": args.method,
        "eps": args.eps,
        "t0": args.t0,
        "s1": args.s1,
        "s2": args.s2,
    }
    outputs = [
        "loading_a.csv",
        "loading_b.csv",
        "factors_f.csv",
        "factors_g.csv",
        "trace.csv",
        "stats.json",
    ]
    _write_manifest(out, "fit", config_doc, args.seed, outputs, started)
    return EXIT_OK


def _parse_rows(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise ConfigError(f"--rows expects comma-separated integers, got {text!r}")


def cmd_infer(args) -> int:
    started = time.time()
    if not 0.0 < args.level < 1.0:
        raise ConfigError(f"--level must lie in (0, 1), got {args.level}")
    x = read_panel(args.data)
    fit_dir = Path(args.fit)
    try:
        u_a = Basis(read_matrix_csv(str(fit_dir / "loading_a.csv")))
        u_b = Basis(read_matrix_csv(str(fit_dir / "loading_b.csv")))
    except ValueError as exc:
        raise ConfigError(f"{args.fit}: {exc}")
    fit = fit_from_bases(x, u_a, u_b)
    rows = _parse_rows(args.rows)
    mode = args.mode.upper()
    d = x.shape[2] if mode == "A" else x.shape[1]
    for row in rows:
        if not 0 <= row < d:
            raise ConfigError(f"row {row} outside [0, {d}) for mode {mode}")
    out = _out_dir(args)
    r = u_a.r if mode == "A" else u_b.r
    header = (
        ["row", "level", "flagged"]
        + [f"est_{k}" for k in range(r)]
        + [f"stderr_{k}" for k in range(r)]
    )
    table_rows = []
    details = []
    for row in rows:
        ci = loading_row_ci(x, fit, mode, row, args.level)
        flagged = int(ci.psd_repair > 0.01)
        table_rows.append(
            [row, ci.level, flagged] + list(ci.estimate) + list(ci.stderr)
        )
        details.append(
            {
                "row": row,
                "estimate": list(ci.estimate),
                "stderr": list(ci.stderr),
                "ci_lo": list(ci.ci_lo),
                "ci_hi": list(ci.ci_hi),
                "level": ci.level,
                "psd_repair": ci.psd_repair,
                "flagged": bool(flagged),
            }
        )
    _write_csv_atomic(out / f"infer_{mode}.csv", header, table_rows)
    _write_json_atomic(out / f"infer_{mode}.json", {"mode": mode, "rows": details})
    config_doc = {
        "data": str(args.data),
        "fit": str(args.fit),
        "mode": mode,
        "rows": rows,
        "level": args.level,
    }
    _write_manifest(
        out, "infer", config_doc, args.seed,
        [f"infer_{mode}.csv", f"infer_{mode}.json"], started,
    )
    return EXIT_OK


def _experiment_grid_from_doc(doc: dict, seed_override) -> ExperimentGrid:
    required = {"dims", "sample_sizes", "regimes", "ranks", "replicates", "seed"}
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"experiment config missing fields: {sorted(missing)}")
    allowed = required | {"methods", "sigma_eps", "eigen_pool", "burn_in",
                          "eps", "max_iter"}
    unknown = set(doc) - allowed - {"kind"}
    if unknown:
        raise ConfigError(f"unknown experiment config fields: {sorted(unknown)}")
    kwargs = {k: v for k, v in doc.items() if k != "kind"}
    if seed_override is not None:
        kwargs["seed"] = seed_override
    try:
        return ExperimentGrid(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def cmd_experiment(args) -> int:
    started = time.time()
    doc = _load_json(args.config)
    kind = doc.get("kind", "error")
    out = _out_dir(args)
    outputs: list[str] = []
    failure_count = 0

    if kind == "error":
        grid = _experiment_grid_from_doc(doc, args.seed)
        result = run_error_experiment(grid, n_jobs=args.jobs)
        _write_text_atomic(out / "errors.csv", "\n".join(result.csv_lines()) + "\n")
        _write_json_atomic(
            out / "summary.json",
            {
                "kind": "error",
                "cells": result.summary(),
                "failures": [
                    {"cell": f.cell, "replicate": f.replicate, "stage": f.stage,
                     "message": f.message}
                    for f in result.failures
                ],
            },
        )
        outputs = ["errors.csv", "summary.json"]
        ok_cells = {
            (r.d1, r.d2, r.n, r.delta0, r.delta1) for r in result.records
        }
        all_failed = len(ok_cells) == 0
        failure_count = len(result.failures)
        config_doc = doc | {"seed": grid.seed}
        seed = grid.seed
    elif kind in ("normality", "coverage"):
        cfg_doc = doc.get("config")
        if not isinstance(cfg_doc, dict):
            raise ConfigError("normality/coverage config needs a 'config' object")
        replicates = doc.get("replicates")
        if not isinstance(replicates, int) or replicates < 1:
            raise ConfigError("'replicates' must be a positive integer")
        try:
            if args.seed is not None:
                cfg_doc = dict(cfg_doc, seed=args.seed)
            cfg = SimConfig.from_dict(cfg_doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc))
        mode = doc.get("mode", "A")
        row = doc.get("row", 0)
        if kind == "normality":
            result = run_normality_experiment(
                cfg,
                replicates,
                pivot=doc.get("pivot", "oracle"),
                mode=mode,
                row=row,
                coord=doc.get("coord", 0),
                n_jobs=args.jobs,
            )
            _write_text_atomic(out / "pivots.csv", "\n".join(result.csv_lines()) + "\n")
            _write_json_atomic(
                out / "summary.json",
                {
                    "kind": "normality",
                    "pivot": result.pivot,
                    "mode": result.mode,
                    "row": result.row,
                    "coord": result.coord,
                    "replicates": replicates,
                    "successes": int(result.values.size),
                    "failures": len(result.failures),
                    "ks_statistic": result.ks_statistic,
                    "pooled_variance": result.pooled_variance,
                },
            )
            outputs = ["pivots.csv", "summary.json"]
            all_failed = result.values.size == 0
            failure_count = len(result.failures)
        else:
            level = doc.get("level", 0.95)
            result = run_coverage_experiment(
                cfg, replicates, level, mode=mode, row=row, n_jobs=args.jobs
            )
            _write_text_atomic(out / "coverage.csv", "\n".join(result.csv_lines()) + "\n")
            cov = result.coverage
            _write_json_atomic(
                out / "summary.json",
                {
                    "kind": "coverage",
                    "level": level,
                    "mode": result.mode,
                    "row": result.row,
                    "replicates": replicates,
                    "successes": int(result.covered.shape[0]),
                    "failures": len(result.failures),
                    "coverage": None if cov is None else list(cov),
                    "coverage_undefined": cov is None,
                },
            )
            outputs = ["coverage.csv", "summary.json"]
            all_failed = cov is None
            failure_count = len(result.failures)
        config_doc = doc | {"config": cfg.to_dict()}
        seed = cfg.seed
    else:
        raise ConfigError(
            f"unknown experiment kind {kind!r}; choose error, normality or coverage"
        )

    _write_manifest(out, f"experiment:{kind}", config_doc, seed, outputs,
                    started, replicate_failures=failure_count)
    if all_failed:
        log.error("experiment: every cell failed")
        return EXIT_ALL_FAILED
    return EXIT_OK


def cmd_forecast(args) -> int:
    started = time.time()
    r1, r2 = _parse_ranks(args.ranks)
    x = read_panel(args.data)
    spec_doc = None
    if args.spec is not None:
        spec_doc = _load_json(args.spec)
        try:
            spec = PanelSpec.from_dict(spec_doc)
            x = preprocess(x, spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{args.spec}: {exc}")
    try:
        horizons = tuple(int(h) for h in args.horizons.split(","))
    except ValueError:
        raise ConfigError(f"--horizons expects integers, got {args.horizons!r}")
    try:
        report = forecast_expanding(
            x,
            r1,
            r2,
            w0=args.w0,
            horizons=horizons,
            method=args.method,
            vec_rank=args.vec_rank,
            min_window=args.min_window,
        )
    except DegenerateSignalError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))
    out = _out_dir(args)
    _write_json_atomic(out / "forecast.json", report.to_dict())
    _write_csv_atomic(
        out / "fe.csv", ["origin", "fe"], list(zip(report.origins, report.fe))
    )
    config_doc = {
        "data": str(args.data),
        "spec": spec_doc,
        "ranks": [r1, r2],
        "w0": args.w0,
        "horizons": list(horizons),
        "method": args.method,
        "vec_rank": args.vec_rank,
        "min_window": args.min_window,
    }
    _write_manifest(out, "forecast", config_doc, args.seed,
                    ["forecast.json", "fe.csv"], started)
    return EXIT_OK


def cmd_rank(args) -> int:
    started = time.time()
    x = read_panel(args.data)
    try:
        prop_a, prop_b = rank_diagnostics(x, args.rmax)
    except ValueError as exc:
        raise ConfigError(str(exc))
    out = _out_dir(args)
    _write_json_atomic(
        out / "rank.json",
        {
            "rmax": args.rmax,
            "row_factor_proportions": list(prop_a),
            "column_factor_proportions": list(prop_b),
        },
    )
    _write_csv_atomic(
        out / "rank.csv",
        ["component", "row_factor_proportion", "column_factor_proportion"],
        [(k + 1, a, b) for k, (a, b) in enumerate(zip(prop_a, prop_b))],
    )
    config_doc = {"data": str(args.data), "rmax": args.rmax}
    _write_manifest(out, "rank", config_doc, args.seed,
                    ["rank.json", "rank.csv"], started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and dispatch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mafm",
        description="Additive row/column factor models for matrix time series.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker processes for replicate-level parallelism")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="draw a synthetic panel plus ground truth")
    p.add_argument("--config", required=True, help="SimConfig JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="estimate loading spaces")
    p.add_argument("--data", required=True, help="panel CSV or slice directory")
    p.add_argument("--ranks", required=True, help="r1,r2")
    p.add_argument("--method", choices=("mine", "compas", "pcompas"),
                   default="compas")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--t0", type=int, default=100, help="iteration cap")
    p.add_argument("--s1", type=int, default=None,
                   help="partial complement size, column side")
    p.add_argument("--s2", type=int, default=None,
                   help="partial complement size, row side")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("infer", parents=[common],
                       help="confidence intervals for loading rows")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True, help="directory written by fit")
    p.add_argument("--mode", choices=("A", "B", "a", "b"), default="A")
    p.add_argument("--rows", required=True, help="comma-separated row indices")
    p.add_argument("--level", type=float, default=0.95)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("experiment", parents=[common],
                       help="Monte Carlo error/normality/coverage runs")
    p.add_argument("--config", required=True, help="experiment JSON config")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("forecast", parents=[common],
                       help="expanding-window one-step forecasts")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", default=None, help="PanelSpec JSON for transforms")
    p.add_argument("--ranks", required=True, help="r1,r2")
    p.add_argument("--w0", type=int, required=True, help="first forecast origin")
    p.add_argument("--horizons", default="5,10", help="comma-separated h values")
    p.add_argument("--method", choices=("mafm", "vec", "mean"), default="mafm")
    p.add_argument("--vec-rank", type=int, default=None)
    p.add_argument("--min-window", type=int, default=None)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("rank", parents=[common],
                       help="eigenvalue-proportion rank diagnostics")
    p.add_argument("--data", required=True)
    p.add_argument("--rmax", type=int, required=True)
    p.set_defaults(func=cmd_rank)

    return parser


def _configure_logging() -> None:
    levels = {
        "error": logging.ERROR,
        "warn": logging.WARNING,
        "info": logging.INFO,
        "debug": logging.DEBUG,
    }
    name = os.environ.get("MAFM_LOG", "warn").lower()
    if name not in levels:
        print(
            f"mafm: MAFM_LOG must be one of {sorted(levels)}, got {name!r}",
            file=sys.stderr,
        )
        name = "warn"
    logging.basicConfig(
        level=levels[name],
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mafm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateSignalError as exc:
        print(f"mafm: degenerate signal: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except IllConditionedInferenceError as exc:
        print(f"mafm: ill-conditioned inference: {exc}", file=sys.stderr)
        return EXIT_ILL_CONDITIONED
    except OSError as exc:
        print(f"mafm: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
