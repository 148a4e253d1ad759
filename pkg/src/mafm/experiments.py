"""Monte Carlo harnesses: error grids, pivot normality, interval coverage.

Every replicate draws its randomness from a substream keyed by
(seed, cell index, replicate index), so results are reproducible bitwise,
independent of execution order, and safe to fan out across processes.
Loading matrices are drawn once per grid cell and shared by all replicates
of that cell; factors and noise are redrawn per replicate.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import kstest

from .estimate import (
    DegenerateSignalError,
    compas,
    compas_partial,
    mine,
)
from .infer import (
    IllConditionedInferenceError,
    loading_row_ci,
    standardized_row,
)
from .linalg import procrustes_rotation, subspace_distance
from .synth import DEFAULT_EIGEN_POOL, SimConfig, gen_loading, simulate, substream

__all__ = [
    "METHODS",
    "ExperimentGrid",
    "ErrorRecord",
    "ErrorExperimentResult",
    "NormalityResult",
    "CoverageResult",
    "run_error_experiment",
    "run_normality_experiment",
    "run_coverage_experiment",
]

log = logging.getLogger(__name__)

METHODS = ("MINE", "COMPAS", "PCOMPAS")

ERROR_CSV_HEADER = (
    "d1,d2,n,delta0,delta1,method,mode,replicate,value"
)


@dataclass(frozen=True)
class ExperimentGrid:
    """Cartesian grid of simulation cells for the error experiment."""

    dims: tuple[tuple[int, int], ...]
    sample_sizes: tuple[int, ...]
    regimes: tuple[tuple[float, float], ...]
    ranks: tuple[int, int]
    replicates: int
    seed: int
    methods: tuple[str, ...] = METHODS
    sigma_eps: float = 1.0
    eigen_pool: tuple[tuple[float, float], ...] = DEFAULT_EIGEN_POOL
    burn_in: int = 200
    eps: float = 1e-8
    max_iter: int = 100

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(tuple(d) for d in self.dims))
        object.__setattr__(self, "sample_sizes", tuple(self.sample_sizes))
        object.__setattr__(self, "regimes", tuple(tuple(r) for r in self.regimes))
        object.__setattr__(self, "ranks", tuple(self.ranks))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.dims or not self.sample_sizes or not self.regimes:
            raise ValueError("dims, sample_sizes and regimes must be nonempty")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(
                f"unknown methods {sorted(unknown)}; choose from {METHODS}"
            )

    def cells(self) -> list[tuple[tuple[int, int], int, tuple[float, float]]]:
        return list(product(self.dims, self.sample_sizes, self.regimes))

    def cell_config(self, cell) -> SimConfig:
        (d1, d2), n, (delta0, delta1) = cell
        r1, r2 = self.ranks
        return SimConfig(
            d1=d1,
            d2=d2,
            r1=r1,
            r2=r2,
            n=n,
            delta0=delta0,
            delta1=delta1,
            sigma_eps=self.sigma_eps,
            eigen_pool=self.eigen_pool,
            burn_in=self.burn_in,
            seed=self.seed,
        )


@dataclass(frozen=True)
class ErrorRecord:
    d1: int
    d2: int
    n: int
    delta0: float
    delta1: float
    method: str
    mode: str
    replicate: int
    value: float

    def csv_row(self) -> str:
        return (
            f"{self.d1},{self.d2},{self.n},{self.delta0!r},{self.delta1!r},"
            f"{self.method},{self.mode},{self.replicate},{self.value!r}"
        )


@dataclass(frozen=True)
class Failure:
    cell: int
    replicate: int
    stage: str
    message: str


@dataclass
class ErrorExperimentResult:
    grid: ExperimentGrid
    records: list[ErrorRecord]
    failures: list[Failure]

    def csv_lines(self) -> list[str]:
        return [ERROR_CSV_HEADER] + [rec.csv_row() for rec in self.records]

    def summary(self) -> list[dict]:
        """One row per (cell, method, mode): moments and quantiles of log error."""
        keys: dict[tuple, list[float]] = {}
        for rec in self.records:
            key = (rec.d1, rec.d2, rec.n, rec.delta0, rec.delta1, rec.method, rec.mode)
            keys.setdefault(key, []).append(rec.value)
        rows = []
        for key in sorted(keys):
            values = np.asarray(keys[key])
            logs = np.log(np.maximum(values, 1e-300))
            d1, d2, n, delta0, delta1, method, mode = key
            rows.append(
                {
                    "d1": d1,
                    "d2": d2,
                    "n": n,
                    "delta0": delta0,
                    "delta1": delta1,
                    "method": method,
                    "mode": mode,
                    "replicates": int(values.size),
                    "mean_log_error": float(logs.mean()),
                    "sd_log_error": float(logs.std(ddof=1)) if values.size > 1 else 0.0,
                    "mean_error": float(values.mean()),
                    "q10": float(np.quantile(values, 0.1)),
                    "q50": float(np.quantile(values, 0.5)),
                    "q90": float(np.quantile(values, 0.9)),
                }
            )
        return rows

    def mean_log_error(self, d: int, n: int, method: str, mode: str,
                       regime: tuple[float, float] = (0.0, 0.0)) -> float:
        logs = [
            math.log(rec.value)
            for rec in self.records
            if rec.d1 == d
            and rec.n == n
            and rec.method == method
            and rec.mode == mode
            and (rec.delta0, rec.delta1) == regime
        ]
        if not logs:
            raise KeyError(f"no records for d={d}, n={n}, {method}/{mode}, {regime}")
        return float(np.mean(logs))


def _partial_slice_sizes(d1: int, d2: int, r1: int, r2: int) -> tuple[int, int]:
    """Half of each full complement, floored at the legal minimum."""
    return max(r2, (d1 - r2) // 2), max(r1, (d2 - r1) // 2)


def _cell_loadings(grid: ExperimentGrid, cell_idx: int, cfg: SimConfig):
    rng = substream(grid.seed, cell_idx, 0)
    a = gen_loading(cfg.d2, cfg.r1, cfg.delta0, cfg.delta1, rng)
    b = gen_loading(cfg.d1, cfg.r2, cfg.delta0, cfg.delta1, rng)
    return a, b


def _error_task(args) -> tuple[list[ErrorRecord], list[Failure]]:
    grid, cell_idx, cell, rep = args
    cfg = grid.cell_config(cell)
    loadings = _cell_loadings(grid, cell_idx, cfg)
    rng = substream(grid.seed, cell_idx, 1, rep)
    x, truth = simulate(cfg, loadings=loadings, rng=rng)
    r1, r2 = grid.ranks

    records: list[ErrorRecord] = []
    failures: list[Failure] = []

    def emit(method, u_a, u_b):
        for mode, est, true in (("A", u_a, truth.u_a), ("B", u_b, truth.u_b)):
            records.append(
                ErrorRecord(
                    d1=cfg.d1,
                    d2=cfg.d2,
                    n=cfg.n,
                    delta0=cfg.delta0,
                    delta1=cfg.delta1,
                    method=method,
                    mode=mode,
                    replicate=rep,
                    value=subspace_distance(est, true),
                )
            )

    try:
        init = mine(x, r1, r2)
    except DegenerateSignalError as exc:
        failures.append(Failure(cell_idx, rep, "MINE", str(exc)))
        return records, failures
    if "MINE" in grid.methods:
        emit("MINE", *init)
    if "COMPAS" in grid.methods:
        try:
            fit = compas(x, r1, r2, init, eps=grid.eps, max_iter=grid.max_iter)
            emit("COMPAS", fit.u_a, fit.u_b)
        except DegenerateSignalError as exc:
            failures.append(Failure(cell_idx, rep, "COMPAS", str(exc)))
    if "PCOMPAS" in grid.methods:
        if 2 * r2 > cfg.d1 or 2 * r1 > cfg.d2:
            failures.append(
                Failure(
                    cell_idx, rep, "PCOMPAS",
                    f"no legal partial-complement size for dims "
                    f"({cfg.d1}, {cfg.d2}) at ranks ({r1}, {r2})",
                )
            )
        else:
            s1, s2 = _partial_slice_sizes(cfg.d1, cfg.d2, r1, r2)
            try:
                fit = compas_partial(
                    x, r1, r2, s1, s2, init, eps=grid.eps, max_iter=grid.max_iter
                )
                emit("PCOMPAS", fit.u_a, fit.u_b)
            except DegenerateSignalError as exc:
                failures.append(Failure(cell_idx, rep, "PCOMPAS", str(exc)))
    return records, failures


def _run_tasks(task_fn, tasks, n_jobs: int):
    """Evaluate tasks preserving submission order regardless of parallelism."""
    if n_jobs <= 1:
        return [task_fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(task_fn, tasks, chunksize=max(1, len(tasks) // (4 * n_jobs))))


def run_error_experiment(grid: ExperimentGrid, n_jobs: int = 1) -> ErrorExperimentResult:
    """Loading-space estimation error over the full grid.

    Per cell the loadings are fixed once; each replicate redraws factors and
    noise, fits each configured method, and records the sine distance to the
    true loading spaces for both modes. Degenerate replicates are recorded
    as failures, never aborts.
    """
    tasks = [
        (grid, cell_idx, cell, rep)
        for cell_idx, cell in enumerate(grid.cells())
        for rep in range(grid.replicates)
    ]
    log.info("error experiment: %d cells x %d replicates", len(grid.cells()), grid.replicates)
    records: list[ErrorRecord] = []
    failures: list[Failure] = []
    for recs, fails in _run_tasks(_error_task, tasks, n_jobs):
        records.extend(recs)
        failures.extend(fails)
    return ErrorExperimentResult(grid=grid, records=records, failures=failures)


@dataclass
class NormalityResult:
    cfg: SimConfig
    pivot: str
    mode: str
    row: int
    coord: int
    values: np.ndarray
    failures: list[Failure]

    @property
    def ks_statistic(self) -> float:
        if self.values.size == 0:
            return float("nan")
        return float(kstest(self.values, "norm").statistic)

    @property
    def pooled_variance(self) -> float:
        if self.values.size < 2:
            return float("nan")
        return float(self.values.var(ddof=1))

    def csv_lines(self) -> list[str]:
        lines = ["replicate,value"]
        lines += [f"{i},{v!r}" for i, v in enumerate(self.values)]
        return lines


def _normality_task(args):
    cfg, seed, rep, loadings, pivot, mode, row, coord, eps, max_iter = args
    rng = substream(seed, 1, rep)
    x, truth = simulate(cfg, loadings=loadings, rng=rng)
    try:
        fit = compas(x, cfg.r1, cfg.r2, mine(x, cfg.r1, cfg.r2), eps=eps,
                     max_iter=max_iter)
        value = standardized_row(x, fit, truth, mode=mode, row=row, covs=pivot)[coord]
    except (DegenerateSignalError, IllConditionedInferenceError) as exc:
        return None, Failure(0, rep, "pivot", str(exc))
    return float(value), None


def run_normality_experiment(
    cfg: SimConfig,
    replicates: int,
    pivot: str = "oracle",
    mode: str = "A",
    row: int = 0,
    coord: int = 0,
    n_jobs: int = 1,
    eps: float = 1e-8,
    max_iter: int = 100,
) -> NormalityResult:
    """Draws of one standardized pivot coordinate across replicates.

    pivot is "oracle" (population covariances) or "plugin" (data-driven).
    Returns the raw draws, ready for external QQ plotting, plus the
    Kolmogorov-Smirnov distance to the standard normal.
    """
    if pivot not in ("oracle", "plugin"):
        raise ValueError(f"pivot must be 'oracle' or 'plugin', got {pivot!r}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    load_rng = substream(cfg.seed, 0)
    a = gen_loading(cfg.d2, cfg.r1, cfg.delta0, cfg.delta1, load_rng)
    b = gen_loading(cfg.d1, cfg.r2, cfg.delta0, cfg.delta1, load_rng)
    tasks = [
        (cfg, cfg.seed, rep, (a, b), pivot, mode, row, coord, eps, max_iter)
        for rep in range(replicates)
    ]
    values: list[float] = []
    failures: list[Failure] = []
    for value, failure in _run_tasks(_normality_task, tasks, n_jobs):
        if failure is not None:
            failures.append(failure)
        else:
            values.append(value)
    return NormalityResult(
        cfg=cfg,
        pivot=pivot,
        mode=mode,
        row=row,
        coord=coord,
        values=np.asarray(values),
        failures=failures,
    )


@dataclass
class CoverageResult:
    cfg: SimConfig
    level: float
    mode: str
    row: int
    covered: np.ndarray  # (successes, r) boolean
    failures: list[Failure]

    @property
    def attempts(self) -> int:
        return self.covered.shape[0] + len(self.failures)

    @property
    def coverage(self) -> np.ndarray | None:
        """Per-coordinate empirical coverage, or None when every replicate failed."""
        if self.covered.shape[0] == 0:
            return None
        return self.covered.mean(axis=0)

    @property
    def binomial_se(self) -> np.ndarray | None:
        cov = self.coverage
        if cov is None:
            return None
        m = self.covered.shape[0]
        return np.sqrt(np.clip(cov * (1 - cov), 0, None) / m)

    def csv_lines(self) -> list[str]:
        lines = ["coord,successes,covered,coverage,binomial_se"]
        cov = self.coverage
        se = self.binomial_se
        m = self.covered.shape[0]
        for k in range(self.covered.shape[1] if m else 0):
            hits = int(self.covered[:, k].sum())
            lines.append(
                f"{k},{m},{hits},{cov[k]!r},{se[k]!r}"
            )
        return lines


def _coverage_task(args):
    cfg, seed, rep, loadings, level, mode, row, eps, max_iter = args
    rng = substream(seed, 1, rep)
    x, truth = simulate(cfg, loadings=loadings, rng=rng)
    try:
        fit = compas(x, cfg.r1, cfg.r2, mine(x, cfg.r1, cfg.r2), eps=eps,
                     max_iter=max_iter)
        ci = loading_row_ci(x, fit, mode, row, level)
    except (DegenerateSignalError, IllConditionedInferenceError) as exc:
        return None, Failure(0, rep, "ci", str(exc))
    if mode.upper() == "A":
        u, uhat = truth.u_a, fit.u_a
    else:
        u, uhat = truth.u_b, fit.u_b
    rot = procrustes_rotation(u, uhat)
    target = rot.T @ u.cols[row]
    hit = (ci.ci_lo <= target) & (target <= ci.ci_hi)
    return hit, None


def run_coverage_experiment(
    cfg: SimConfig,
    replicates: int,
    level: float,
    mode: str = "A",
    row: int = 0,
    n_jobs: int = 1,
    eps: float = 1e-8,
    max_iter: int = 100,
) -> CoverageResult:
    """Empirical coverage of the data-driven intervals for one loading row.

    Containment is checked against the Procrustes-rotated truth row, the
    object the intervals target. Ill-conditioned replicates (for instance
    noise-free panels) are recorded as failures; coverage is None when no
    replicate succeeds.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    load_rng = substream(cfg.seed, 0)
    a = gen_loading(cfg.d2, cfg.r1, cfg.delta0, cfg.delta1, load_rng)
    b = gen_loading(cfg.d1, cfg.r2, cfg.delta0, cfg.delta1, load_rng)
    tasks = [
        (cfg, cfg.seed, rep, (a, b), level, mode, row, eps, max_iter)
        for rep in range(replicates)
    ]
    hits: list[np.ndarray] = []
    failures: list[Failure] = []
    for hit, failure in _run_tasks(_coverage_task, tasks, n_jobs):
        if failure is not None:
            failures.append(failure)
        else:
            hits.append(hit)
    r = cfg.r1 if mode.upper() == "A" else cfg.r2
    covered = np.asarray(hits, dtype=bool).reshape(len(hits), r)
    return CoverageResult(
        cfg=cfg,
        level=level,
        mode=mode,
        row=row,
        covered=covered,
        failures=failures,
    )
