"""Inference for rows of the estimated loading matrices.

Plug-in covariance estimators for the projected factor covariances and for
the signal-by-noise cross-product covariances, standardized pivot vectors
(population or plug-in covariances), and per-coordinate Wald confidence
intervals. The d1*d2 x d1*d2 residual covariance is never materialized: all
quadratic forms stream over residual slices, costing O(n d^2) memory-free
passes instead of O(d^4) storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov
from scipy.stats import norm

from .estimate import MafmFit, _check_series
from .linalg import procrustes_rotation
from .synth import SimTruth

__all__ = [
    "IllConditionedInferenceError",
    "LoadingInference",
    "sigma_f_hat",
    "sigma_g_hat",
    "residual_series",
    "sigma_a_hat",
    "sigma_b_hat",
    "loading_row_ci",
    "standardized_row",
    "population_sigma_f",
    "population_sigma_g",
    "population_row_cov",
]

EIGENVALUE_FLOOR = 1e-12

# Residual energy below this fraction of the panel energy is numerical dust
# (noise-free panels fit to machine precision land around 1e-20); there is
# no noise information to standardize against.
RESIDUAL_ENERGY_FLOOR = 1e-14


class IllConditionedInferenceError(ValueError):
    """Plug-in covariances too close to singular for interval construction."""


@dataclass(frozen=True)
class LoadingInference:
    """Per-coordinate Wald intervals for one row of a loading matrix.

    psd_repair records the negative-eigenvalue mass clipped from the row
    covariance, as a fraction of its trace; values above ~0.01 mean the
    intervals rest on a heavily repaired matrix and deserve suspicion.
    """

    row: int
    estimate: np.ndarray
    stderr: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    level: float
    psd_repair: float = 0.0


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _complement_apply(basis_cols: np.ndarray, series: np.ndarray) -> np.ndarray:
    """(I - U U') M_t for every slice of a (n, p, k) stack."""
    return series - np.matmul(basis_cols, np.matmul(basis_cols.T, series))


def sigma_f_hat(x: np.ndarray, fit: MafmFit) -> np.ndarray:
    """Plug-in covariance of the complement-projected row factors, r1 x r1.

    (1/n) sum_t U_a' X_t' (I - U_b U_b') X_t U_a, assembled as a Gram of the
    projected factor stack so symmetry and positive semidefiniteness hold by
    construction.
    """
    x = _check_series(x)
    n = x.shape[0]
    xu = np.matmul(x, fit.u_a.cols)
    proj = _complement_apply(fit.u_b.cols, xu)
    flat = proj.reshape(n * x.shape[1], fit.u_a.r)
    return flat.T @ flat / n


def sigma_g_hat(x: np.ndarray, fit: MafmFit) -> np.ndarray:
    """Mirror of :func:`sigma_f_hat` for the column factors, r2 x r2."""
    x = _check_series(x)
    n = x.shape[0]
    xtu = np.matmul(x.transpose(0, 2, 1), fit.u_b.cols)
    proj = _complement_apply(fit.u_a.cols, xtu)
    flat = proj.reshape(n * x.shape[2], fit.u_b.r)
    return flat.T @ flat / n


def residual_series(x: np.ndarray, fit: MafmFit) -> np.ndarray:
    """X_t minus both fitted signal components; doubly complement-projected."""
    x = _check_series(x)
    return (
        x
        - fit.f @ fit.u_a.cols.T
        - np.matmul(fit.u_b.cols, fit.g.transpose(0, 2, 1))
    )


def sigma_a_hat(x: np.ndarray, fit: MafmFit, row: int) -> np.ndarray:
    """Signal-by-noise covariance for row `row` of the row-loading matrix.

    Streams the double sum (1/n^2) sum_{t,s} v_ts v_ts' with
    v_ts = F_t' (I - U_b U_b') R_s (I - U_a U_a') e_row, grouping the s-sum
    into one d1 x d1 Gram first.
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if not 0 <= row < d2:
        raise ValueError(f"row index must lie in [0, {d2}), got {row}")
    resid = residual_series(x, fit)
    ua = fit.u_a.cols
    w = -ua @ ua[row]
    w[row] += 1.0
    rw = resid @ w
    cross = rw.T @ rw
    fb = _complement_apply(fit.u_b.cols, fit.f)
    flat_f = fb.reshape(n * d1, fit.u_a.r)
    flat_cf = np.matmul(cross, fb).reshape(n * d1, fit.u_a.r)
    return _sym(flat_f.T @ flat_cf / n**2)


def sigma_b_hat(x: np.ndarray, fit: MafmFit, row: int) -> np.ndarray:
    """Mirror of :func:`sigma_a_hat` for row `row` of the column loadings."""
    x = _check_series(x)
    n, d1, d2 = x.shape
    if not 0 <= row < d1:
        raise ValueError(f"row index must lie in [0, {d1}), got {row}")
    resid = residual_series(x, fit)
    ub = fit.u_b.cols
    w = -ub @ ub[row]
    w[row] += 1.0
    rw = np.matmul(w, resid)
    cross = rw.T @ rw
    gb = _complement_apply(fit.u_a.cols, fit.g)
    flat_g = gb.reshape(n * d2, fit.u_b.r)
    flat_cg = np.matmul(cross, gb).reshape(n * d2, fit.u_b.r)
    return _sym(flat_g.T @ flat_cg / n**2)


def _eig_psd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Eigendecomposition with negative eigenvalues clipped to zero.

    Returns (clipped eigenvalues ascending, eigenvectors, repair ratio).
    """
    w, v = np.linalg.eigh(_sym(m))
    trace = float(np.sum(w))
    clipped = float(-np.sum(w[w < 0.0]))
    repair = clipped / trace if trace > 0 else np.inf if clipped > 0 else 0.0
    return np.maximum(w, 0.0), v, repair


def inv_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Inverse square root of a near-PSD matrix with an eigenvalue floor."""
    w, v, _ = _eig_psd(m)
    trace = float(np.sum(w))
    if trace <= 0:
        raise IllConditionedInferenceError(
            "cannot take the inverse square root of a zero matrix"
        )
    w = np.maximum(w, EIGENVALUE_FLOOR * trace)
    return (v / np.sqrt(w)) @ v.T


def _require_residual_energy(x: np.ndarray, fit: MafmFit) -> None:
    resid = residual_series(x, fit)
    rss = float(np.sum(resid**2))
    total = float(np.sum(x**2))
    if rss <= RESIDUAL_ENERGY_FLOOR * total:
        raise IllConditionedInferenceError(
            "signal-by-noise covariance vanished (zero standard errors): "
            f"residual energy is {rss:.3e} against panel energy {total:.3e}"
        )


def _factor_cov_inverse(sig: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(_sym(sig))
    trace = float(np.sum(w))
    if trace <= 0 or w[0] <= 1e-10 * trace:
        raise IllConditionedInferenceError(
            "projected factor covariance is singular "
            f"(smallest eigenvalue {w[0]:.3e}, trace {trace:.3e})"
        )
    return (v / w) @ v.T


def loading_row_ci(
    x: np.ndarray, fit: MafmFit, mode: str, row: int, level: float
) -> LoadingInference:
    """Wald confidence intervals for one row of a loading matrix.

    The implied covariance of the estimated row is
    (1/n) SigmaF^{-1} SigmaRow SigmaF^{-1} built from the plug-in
    estimators; intervals cover the rotation-aligned truth row.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    mode = mode.upper()
    x = _check_series(x)
    _require_residual_energy(x, fit)
    if mode == "A":
        sig_f = sigma_f_hat(x, fit)
        sig_row = sigma_a_hat(x, fit, row)
        est = fit.u_a.cols[row].copy()
    elif mode == "B":
        sig_f = sigma_g_hat(x, fit)
        sig_row = sigma_b_hat(x, fit, row)
        est = fit.u_b.cols[row].copy()
    else:
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")

    sig_f_inv = _factor_cov_inverse(sig_f)
    w_row, v_row, repair = _eig_psd(sig_row)
    sig_row_fixed = (v_row * w_row) @ v_row.T
    n = x.shape[0]
    cov = sig_f_inv @ sig_row_fixed @ sig_f_inv / n
    variances = np.diag(cov).copy()
    if np.any(variances <= 0):
        raise IllConditionedInferenceError(
            "nonpositive interval variance after PSD repair"
        )
    stderr = np.sqrt(variances)
    z = norm.ppf(0.5 * (1.0 + level))
    return LoadingInference(
        row=row,
        estimate=est,
        stderr=stderr,
        ci_lo=est - z * stderr,
        ci_hi=est + z * stderr,
        level=level,
        psd_repair=repair,
    )


def population_sigma_f(truth: SimTruth) -> np.ndarray:
    """Population covariance of the complement-projected canonical row factors.

    Row i of the raw factors has stationary VAR(1) covariance solving
    S = Phi S Phi' + I; the canonical transform folds in the loading SVD
    pieces, and the projector contributes only its diagonal because rows are
    independent.
    """
    r1 = truth.f.shape[2]
    if r1 == 0:
        return np.zeros((0, 0))
    d1 = truth.f.shape[1]
    if truth.u_b is None:
        pdiag = np.ones(d1)
    else:
        pdiag = 1.0 - np.sum(truth.u_b.cols**2, axis=1)
    acc = np.zeros((r1, r1))
    for i in range(d1):
        stat = solve_discrete_lyapunov(truth.phi_f[i], np.eye(r1))
        acc += pdiag[i] * (truth.t_a.T @ stat @ truth.t_a)
    return _sym(acc)


def population_sigma_g(truth: SimTruth) -> np.ndarray:
    """Mirror of :func:`population_sigma_f` for the column factors."""
    r2 = truth.g.shape[2]
    if r2 == 0:
        return np.zeros((0, 0))
    d2 = truth.g.shape[1]
    if truth.u_a is None:
        pdiag = np.ones(d2)
    else:
        pdiag = 1.0 - np.sum(truth.u_a.cols**2, axis=1)
    acc = np.zeros((r2, r2))
    for j in range(d2):
        stat = solve_discrete_lyapunov(truth.phi_g[j], np.eye(r2))
        acc += pdiag[j] * (truth.t_b.T @ stat @ truth.t_b)
    return _sym(acc)


def population_row_cov(truth: SimTruth, mode: str, row: int) -> np.ndarray:
    """Population signal-by-noise covariance under i.i.d. noise.

    With entrywise-independent noise of variance sigma^2 the Kronecker
    sandwich collapses to sigma^2 ||(I - U U') e_row||^2 times the projected
    factor covariance.
    """
    mode = mode.upper()
    if mode == "A":
        if truth.u_a is None:
            raise ValueError("row-loading truth has rank zero")
        leverage = 1.0 - float(np.sum(truth.u_a.cols[row] ** 2))
        return truth.sigma_eps**2 * leverage * population_sigma_f(truth)
    if mode == "B":
        if truth.u_b is None:
            raise ValueError("column-loading truth has rank zero")
        leverage = 1.0 - float(np.sum(truth.u_b.cols[row] ** 2))
        return truth.sigma_eps**2 * leverage * population_sigma_g(truth)
    raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")


def standardized_row(
    x: np.ndarray,
    fit: MafmFit,
    truth: SimTruth,
    mode: str = "A",
    row: int = 0,
    covs: str = "oracle",
) -> np.ndarray:
    """Standardized pivot for one estimated loading row (simulation use).

    With covs="oracle" the population covariances and the Procrustes
    rotation standardize the row; the rotation sandwiches the pivot. With
    covs="plugin" the plug-in covariance estimators are used and no rotation
    touches them (they cancel), only the centering uses the rotation.
    Either way the result is asymptotically standard normal in each
    coordinate.
    """
    if covs not in ("oracle", "plugin"):
        raise ValueError(f"covs must be 'oracle' or 'plugin', got {covs!r}")
    mode = mode.upper()
    if mode == "A":
        uhat, u = fit.u_a, truth.u_a
    elif mode == "B":
        uhat, u = fit.u_b, truth.u_b
    else:
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")
    if u is None:
        raise ValueError(f"truth has rank zero on mode {mode}")
    if not 0 <= row < uhat.p:
        raise ValueError(f"row index must lie in [0, {uhat.p}), got {row}")

    rot = procrustes_rotation(u, uhat)
    delta = uhat.cols[row] - rot.T @ u.cols[row]
    n = x.shape[0]

    if covs == "oracle":
        sig_f = population_sigma_f(truth) if mode == "A" else population_sigma_g(truth)
        sig_row = population_row_cov(truth, mode, row)
        if float(np.trace(sig_row)) <= 0:
            raise IllConditionedInferenceError(
                "population signal-by-noise covariance is zero (noise-free truth)"
            )
        return np.sqrt(n) * (rot.T @ (inv_sqrt_psd(sig_row) @ (sig_f @ (rot @ delta))))

    _require_residual_energy(_check_series(x), fit)
    if mode == "A":
        sig_f = sigma_f_hat(x, fit)
        sig_row = sigma_a_hat(x, fit, row)
    else:
        sig_f = sigma_g_hat(x, fit)
        sig_row = sigma_b_hat(x, fit, row)
    return np.sqrt(n) * (inv_sqrt_psd(sig_row) @ (sig_f @ delta))
