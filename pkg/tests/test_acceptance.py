"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The Monte Carlo fixtures are session-scoped and shared across criteria;
every random quantity flows from the frozen seeds below, so the whole suite
is deterministic. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import os
import time

import numpy as np
import pytest

from conftest import brute_force_row_cov

from mafm.cli import main as cli_main
from mafm.estimate import (
    compas,
    fit_from_bases,
    fitted_values,
    mine,
)
from mafm.experiments import (
    ExperimentGrid,
    run_coverage_experiment,
    run_error_experiment,
    run_normality_experiment,
)
from mafm.infer import population_sigma_f, sigma_a_hat, sigma_b_hat
from mafm.linalg import Basis, random_orthonormal, subspace_distance
from mafm.pipeline import (
    PanelSpec,
    forecast_expanding,
    insample_stats,
    preprocess,
    vec_factor_baseline,
)
from mafm.synth import SimConfig, simulate

GRID_SEED = 424242
PIVOT_SEED = 55555
FORECAST_SEED = 17


def _report(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[ACCEPTANCE {num:>2}] {name}: {status}  {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


# ---------------------------------------------------------------------------
# Shared Monte Carlo fixtures


@pytest.fixture(scope="session")
def ordering_result():
    grid = ExperimentGrid(
        dims=((50, 50), (100, 100)),
        sample_sizes=(200, 400),
        regimes=((0.0, 0.0),),
        ranks=(2, 2),
        replicates=100,
        seed=GRID_SEED,
    )
    started = time.time()
    result = run_error_experiment(grid)
    return result, time.time() - started


@pytest.fixture(scope="session")
def d200_result():
    grid = ExperimentGrid(
        dims=((200, 200),),
        sample_sizes=(200,),
        regimes=((0.0, 0.0),),
        ranks=(2, 2),
        replicates=100,
        seed=GRID_SEED,
        methods=("COMPAS",),
    )
    return run_error_experiment(grid)


@pytest.fixture(scope="session")
def weak_result():
    grid = ExperimentGrid(
        dims=((100, 100),),
        sample_sizes=(400,),
        regimes=((0.3, 0.5),),
        ranks=(2, 2),
        replicates=100,
        seed=GRID_SEED,
        methods=("COMPAS",),
    )
    return run_error_experiment(grid)


@pytest.fixture(scope="session")
def pivot_cfg():
    return SimConfig(d1=50, d2=50, r1=2, r2=2, n=200, sigma_eps=1.0,
                     seed=PIVOT_SEED)


@pytest.fixture(scope="session")
def oracle_normality(pivot_cfg):
    return run_normality_experiment(pivot_cfg, 500, pivot="oracle")


@pytest.fixture(scope="session")
def plugin_normality(pivot_cfg):
    return run_normality_experiment(pivot_cfg, 500, pivot="plugin")


@pytest.fixture(scope="session")
def coverage_result(pivot_cfg):
    started = time.time()
    result = run_coverage_experiment(pivot_cfg, 500, 0.95)
    return result, time.time() - started


# ---------------------------------------------------------------------------
# Criteria


def test_criterion_01_noise_free_exact_recovery():
    cfg = SimConfig(d1=50, d2=50, r1=4, r2=2, n=200, sigma_eps=0.0,
                    seed=GRID_SEED)
    x, truth = simulate(cfg)
    started = time.time()
    fit = compas(x, 4, 2, mine(x, 4, 2))
    elapsed = time.time() - started
    dist_a = subspace_distance(fit.u_a, truth.u_a)
    dist_b = subspace_distance(fit.u_b, truth.u_b)
    _report(
        1,
        "noise-free exact recovery",
        dist_a < 1e-6 and dist_b < 1e-6 and elapsed < 5.0,
        f"dist A {dist_a:.2e}, dist B {dist_b:.2e}, fit {elapsed:.2f}s (< 5s)",
    )


def test_criterion_02_reconstruction_identity():
    rng = np.random.default_rng(GRID_SEED)
    worst = 0.0
    for k in range(100):
        d1, d2 = (int(v) for v in rng.integers(4, 12, size=2))
        r1 = int(rng.integers(1, min(4, d2)))
        r2 = int(rng.integers(1, min(4, d1)))
        x = rng.standard_normal((int(rng.integers(6, 13)), d1, d2))
        if k % 2 == 0:
            u_a = Basis(random_orthonormal(d2, r1, rng))
            u_b = Basis(random_orthonormal(d1, r2, rng))
            fit = fit_from_bases(x, u_a, u_b)
        else:
            fit = compas(x, r1, r2, mine(x, r1, r2), max_iter=5)
        recon = fit.f @ fit.u_a.cols.T + np.matmul(
            fit.u_b.cols, fit.g.transpose(0, 2, 1)
        )
        gap = np.max(np.abs(fitted_values(x, fit.u_a, fit.u_b) - recon))
        worst = max(worst, gap)
    _report(2, "reconstruction identity", worst < 1e-10,
            f"max |Xhat - (F Ua' + Ub G')| = {worst:.2e} over 100 fits")


def test_criterion_03_method_ordering(ordering_result):
    result, elapsed = ordering_result
    gaps = []
    ok = True
    for d in (50, 100):
        for n in (200, 400):
            for mode in ("A", "B"):
                m = result.mean_log_error(d, n, "MINE", mode)
                c = result.mean_log_error(d, n, "COMPAS", mode)
                p = result.mean_log_error(d, n, "PCOMPAS", mode)
                ok &= c < m and c < p
                gaps.append(min(m - c, p - c))
    ok &= elapsed < 1800
    _report(
        3,
        "method ordering over the grid",
        ok,
        f"min log-gap {min(gaps):.3f} across 8 cell/mode pairs, "
        f"grid runtime {elapsed:.0f}s (< 1800s)",
    )


def test_criterion_04_dimension_decay(ordering_result, d200_result):
    result, _ = ordering_result
    ok = True
    details = []
    for mode in ("A", "B"):
        errs = [
            result.mean_log_error(50, 200, "COMPAS", mode),
            result.mean_log_error(100, 200, "COMPAS", mode),
            d200_result.mean_log_error(200, 200, "COMPAS", mode),
        ]
        ok &= errs[0] > errs[1] > errs[2]
        details.append(f"{mode}: " + " > ".join(f"{e:.3f}" for e in errs))
    _report(4, "error decay in dimension", ok, "; ".join(details))


def test_criterion_05_weak_regime_degradation(ordering_result, weak_result):
    result, _ = ordering_result
    ratios = []
    for mode in ("A", "B"):
        strong = np.exp(result.mean_log_error(100, 400, "COMPAS", mode))
        weak = np.exp(
            weak_result.mean_log_error(100, 400, "COMPAS", mode, regime=(0.3, 0.5))
        )
        ratios.append(weak / strong)
    _report(
        5,
        "weak-regime degradation",
        min(ratios) >= 2.0,
        f"weak/strong mean error ratios A {ratios[0]:.2f}, B {ratios[1]:.2f} (>= 2)",
    )


def test_criterion_06_oracle_normality(oracle_normality):
    ks = oracle_normality.ks_statistic
    var = oracle_normality.pooled_variance
    ok = ks < 0.08 and 0.85 <= var <= 1.15 and not oracle_normality.failures
    _report(6, "oracle pivot normality", ok,
            f"KS {ks:.4f} (< 0.08), pooled variance {var:.4f} (in [0.85, 1.15])")


def test_criterion_07_data_driven_normality(plugin_normality):
    ks = plugin_normality.ks_statistic
    ok = ks < 0.10 and not plugin_normality.failures
    _report(7, "data-driven pivot normality", ok, f"KS {ks:.4f} (< 0.10)")


def test_criterion_08_coverage(coverage_result):
    result, elapsed = coverage_result
    cov = result.coverage
    ok = (
        cov is not None
        and bool(np.all((cov >= 0.92) & (cov <= 0.975)))
        and elapsed < 2700
    )
    _report(
        8,
        "confidence interval coverage",
        ok,
        f"coverage {np.round(cov, 4)} (in [0.92, 0.975]), "
        f"runtime {elapsed:.0f}s (< 2700s)",
    )


def test_criterion_09_covariance_oracle_equivalence():
    rng = np.random.default_rng(GRID_SEED + 1)
    worst = 0.0
    fixtures = 0
    for d1 in range(2, 9):
        for d2 in range(2, 9):
            if d1 * d2 > 16:
                continue
            cfg = SimConfig(
                d1=d1,
                d2=d2,
                r1=min(2, d2 - 1),
                r2=min(2, d1 - 1),
                n=6,
                sigma_eps=1.0,
                seed=int(rng.integers(1 << 31)),
            )
            x, _ = simulate(cfg)
            fit = compas(x, cfg.r1, cfg.r2, mine(x, cfg.r1, cfg.r2))
            for row in range(d2):
                gap = np.max(
                    np.abs(sigma_a_hat(x, fit, row)
                           - brute_force_row_cov(x, fit, row, "A"))
                )
                worst = max(worst, gap)
            for row in range(d1):
                gap = np.max(
                    np.abs(sigma_b_hat(x, fit, row)
                           - brute_force_row_cov(x, fit, row, "B"))
                )
                worst = max(worst, gap)
            fixtures += 1

    cfg = SimConfig(d1=20, d2=20, r1=2, r2=2, n=2000, sigma_eps=1.0,
                    seed=GRID_SEED + 2)
    x, truth = simulate(cfg)
    fit = fit_from_bases(x, truth.u_a, truth.u_b)
    sig_f_pop = population_sigma_f(truth)
    rels = []
    for row in (0, 5):
        leverage = 1.0 - float(np.sum(truth.u_a.cols[row] ** 2))
        target = cfg.sigma_eps**2 * leverage * sig_f_pop
        got = sigma_a_hat(x, fit, row)
        rels.append(np.linalg.norm(got - target) / np.linalg.norm(target))
    ok = worst < 1e-12 and max(rels) < 0.10
    _report(
        9,
        "covariance estimator oracle equivalence",
        ok,
        f"streaming vs Kronecker max gap {worst:.2e} over {fixtures} fixtures "
        f"(< 1e-12); analytic identity rel err {max(rels):.3f} (< 0.10)",
    )


def test_criterion_10_forecast_sanity():
    cfg = SimConfig(d1=18, d2=9, r1=4, r2=2, n=131, sigma_eps=1.0,
                    seed=FORECAST_SEED)
    x, _ = simulate(cfg)
    mafm_report = forecast_expanding(x, 4, 2, w0=101, horizons=(30,))
    mean_report = forecast_expanding(x, 4, 2, w0=101, horizons=(30,),
                                     method="mean")
    fit = compas(x, 4, 2, mine(x, 4, 2))
    r2_mafm, _ = insample_stats(x, fitted_values(x, fit.u_a, fit.u_b))
    r2_vec, _ = insample_stats(x, vec_factor_baseline(x, 6).fitted)
    ok = (
        mafm_report.fe_bar[30] < mean_report.fe_bar[30]
        and r2_mafm > r2_vec
        and not mafm_report.skipped
    )
    _report(
        10,
        "forecast sanity on the synthetic panel",
        ok,
        f"FE30 {mafm_report.fe_bar[30]:.3f} < mean-baseline "
        f"{mean_report.fe_bar[30]:.3f}; R2 {r2_mafm:.3f} > vectorized "
        f"{r2_vec:.3f} at matched factor count",
    )


def test_criterion_10_oecd_table_conditional():
    panel_path = os.environ.get("MAFM_OECD_PANEL")
    if not panel_path:
        print(
            "[ACCEPTANCE 10b] published in-sample table: SKIP (conditional; "
            "set MAFM_OECD_PANEL to a t,row,col,value CSV of the 18x9 "
            "quarterly panel to enable)"
        )
        pytest.skip("conditional criterion: external panel not supplied")
    from mafm.cli import read_panel

    x = read_panel(panel_path)
    spec_path = os.environ.get("MAFM_OECD_SPEC")
    if spec_path:
        spec = PanelSpec.from_dict(json.loads(open(spec_path).read()))
        x = preprocess(x, spec)
    fit = compas(x, 4, 2, mine(x, 4, 2))
    r2, fit_err = insample_stats(x, fitted_values(x, fit.u_a, fit.u_b))
    ok = abs(r2 - 0.8539) <= 0.02 and abs(fit_err - 0.1449) <= 0.02
    _report(10, "published in-sample table", ok,
            f"R2 {r2:.4f} (target 0.8539 +/- 0.02), "
            f"Fit-err {fit_err:.4f} (target 0.1449 +/- 0.02)")


def test_criterion_11_jobs_determinism(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(
        json.dumps(
            {
                "kind": "error",
                "dims": [[20, 16]],
                "sample_sizes": [60],
                "regimes": [[0.0, 0.0]],
                "ranks": [2, 2],
                "replicates": 6,
                "seed": GRID_SEED,
            }
        )
    )
    outputs = {}
    for jobs in (1, 8):
        out = tmp_path / f"jobs{jobs}"
        code = cli_main(["experiment", "--config", str(cfg), "--out", str(out),
                         "--jobs", str(jobs)])
        assert code == 0
        outputs[jobs] = (out / "errors.csv").read_bytes()
    _report(
        11,
        "parallel experiment determinism",
        outputs[1] == outputs[8],
        f"errors.csv identical across --jobs 1/8 ({len(outputs[1])} bytes)",
    )
