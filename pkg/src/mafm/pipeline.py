"""Real-data workflow: transforms, rank diagnostics, fit statistics,
expanding-window forecasting, and a vectorized-PCA baseline.

Panels arrive as (n, d1, d2) arrays with rows indexing units and columns
indexing indicators. Column transforms (log first differences, scaled first
differences) consume the first time point; pooled standardization centers
and scales each indicator over all unit-time observations jointly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .estimate import (
    DegenerateSignalError,
    _check_series,
    compas,
    mine,
    series_gram_cols,
    series_gram_rows,
)
from .linalg import top_eigpairs

__all__ = [
    "InvalidDataError",
    "DegenerateColumnError",
    "PanelSpec",
    "ForecastReport",
    "ArModel",
    "VecFactorFit",
    "preprocess",
    "rank_diagnostics",
    "insample_stats",
    "fit_ar_aic",
    "forecast_expanding",
    "vec_factor_baseline",
]

log = logging.getLogger(__name__)

TRANSFORM_TAGS = ("none", "log_diff", "diff_scaled")


class InvalidDataError(ValueError):
    """Panel values incompatible with the requested transform."""


class DegenerateColumnError(ValueError):
    """A column has zero pooled variance and cannot be standardized."""


@dataclass(frozen=True)
class PanelSpec:
    """Labels and per-column transforms of a raw panel."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    transforms: tuple[str, ...]
    scale: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        object.__setattr__(self, "transforms", tuple(self.transforms))
        if len(set(self.row_labels)) != len(self.row_labels):
            raise ValueError("row_labels must be unique")
        if len(set(self.col_labels)) != len(self.col_labels):
            raise ValueError("col_labels must be unique")
        if len(self.transforms) != len(self.col_labels):
            raise ValueError(
                f"need one transform per column, got {len(self.transforms)} "
                f"transforms for {len(self.col_labels)} columns"
            )
        for tag in self.transforms:
            if tag not in TRANSFORM_TAGS:
                raise ValueError(
                    f"unknown transform {tag!r}; choose from {TRANSFORM_TAGS}"
                )

    def to_dict(self) -> dict:
        return {
            "row_labels": list(self.row_labels),
            "col_labels": list(self.col_labels),
            "transforms": list(self.transforms),
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PanelSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown panel-spec fields: {sorted(unknown)}")
        return cls(**doc)


def preprocess(raw: np.ndarray, spec: PanelSpec) -> np.ndarray:
    """Apply per-column transforms, then pooled standardization.

    Differencing consumes the first time point for every column, so the
    output has n - 1 slices. Each output column has pooled mean 0 and
    standard deviation 1 across all (t, unit) observations.
    """
    raw = _check_series(raw)
    n, d1, d2 = raw.shape
    if d1 != len(spec.row_labels) or d2 != len(spec.col_labels):
        raise ValueError(
            f"panel dims ({d1}, {d2}) do not match spec labels "
            f"({len(spec.row_labels)}, {len(spec.col_labels)})"
        )
    if n < 2:
        raise ValueError(f"need at least 2 time points to difference, got n={n}")
    out = np.empty((n - 1, d1, d2))
    for j, tag in enumerate(spec.transforms):
        col = raw[:, :, j]
        if tag == "log_diff":
            bad = np.argwhere(col <= 0)
            if bad.size:
                t, i = bad[0]
                raise InvalidDataError(
                    f"log transform needs positive values; found {col[t, i]!r} "
                    f"at t={t}, unit={spec.row_labels[i]}, "
                    f"column={spec.col_labels[j]}"
                )
            out[:, :, j] = np.diff(np.log(col), axis=0)
        elif tag == "diff_scaled":
            out[:, :, j] = np.diff(col, axis=0) * spec.scale
        else:
            out[:, :, j] = col[1:]
    for j in range(d2):
        pooled = out[:, :, j]
        mu = pooled.mean()
        sd = pooled.std()
        if sd <= 1e-12 * (abs(mu) + 1.0):
            raise DegenerateColumnError(
                f"column {spec.col_labels[j]!r} has zero pooled standard "
                "deviation after transformation"
            )
        out[:, :, j] = (pooled - mu) / sd
    return out


def rank_diagnostics(x: np.ndarray, rmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue proportions of the two modewise Gram matrices.

    Returns (row-factor side, column-factor side): the top rmax eigenvalues
    of (1/n) sum X_t' X_t and (1/n) sum X_t X_t', each divided by the full
    eigenvalue sum of its matrix. Entries are nonincreasing and sum to <= 1.
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if not 1 <= rmax <= min(d1, d2):
        raise ValueError(f"need 1 <= rmax <= min(d1, d2) = {min(d1, d2)}, got {rmax}")

    def proportions(gram):
        vals = np.linalg.eigvalsh(gram)[::-1]
        vals = np.clip(vals, 0.0, None)
        total = vals.sum()
        if total <= 0:
            return np.zeros(rmax)
        return vals[:rmax] / total

    return proportions(series_gram_cols(x)), proportions(series_gram_rows(x))


def insample_stats(x: np.ndarray, fitted: np.ndarray) -> tuple[float, float]:
    """(R^2, fitting error) of a fitted panel against the observed one.

    Fitting error is the mean squared entry of the residual; R^2 compares
    the residual sum of squares against deviations from the grand mean.
    """
    x = _check_series(x)
    fitted = np.asarray(fitted, dtype=float)
    if fitted.shape != x.shape:
        raise ValueError(f"fitted shape {fitted.shape} != panel shape {x.shape}")
    n, d1, d2 = x.shape
    rss = float(np.sum((x - fitted) ** 2))
    fit_err = rss / (d1 * d2 * n)
    grand = x.mean()
    total = float(np.sum((x - grand) ** 2))
    if total <= 0:
        raise ValueError("R^2 undefined: the panel has zero total variation")
    return 1.0 - rss / total, fit_err


@dataclass(frozen=True)
class ArModel:
    """Autoregression with intercept fitted by least squares."""

    order: int
    intercept: float
    coeffs: np.ndarray
    sigma2: float

    def forecast(self, history: np.ndarray) -> float:
        """One-step-ahead point forecast from the end of `history`."""
        if self.order == 0:
            return self.intercept
        if len(history) < self.order:
            raise ValueError(
                f"need at least {self.order} observations, got {len(history)}"
            )
        lags = history[-1 : -self.order - 1 : -1]
        return float(self.intercept + self.coeffs @ lags)


def fit_ar_aic(series: np.ndarray, pmax: int) -> ArModel:
    """AR(p) with p chosen by AIC over a common estimation window.

    All candidate orders are fit on the window t = pmax..n-1, so their
    likelihoods are comparable; AIC = n_eff log(sigma2) + 2p. A constant
    series falls back to the order-0 mean model.
    """
    y = np.asarray(series, dtype=float).ravel()
    n = y.size
    if pmax < 0:
        raise ValueError(f"pmax must be >= 0, got {pmax}")
    if n < pmax + 10:
        raise ValueError(f"need n >= pmax + 10, got n={n}, pmax={pmax}")
    if np.std(y) <= 1e-12 * (np.abs(y).max() + 1.0):
        return ArModel(order=0, intercept=float(y.mean()), coeffs=np.empty(0),
                       sigma2=0.0)
    n_eff = n - pmax
    targets = y[pmax:]
    best: tuple[float, ArModel] | None = None
    for p in range(pmax + 1):
        design = np.ones((n_eff, p + 1))
        for j in range(1, p + 1):
            design[:, j] = y[pmax - j : n - j]
        beta, *_ = np.linalg.lstsq(design, targets, rcond=None)
        resid = targets - design @ beta
        sigma2 = float(resid @ resid) / n_eff
        aic = n_eff * np.log(max(sigma2, 1e-300)) + 2 * p
        model = ArModel(order=p, intercept=float(beta[0]), coeffs=beta[1:],
                        sigma2=sigma2)
        if best is None or aic < best[0]:
            best = (aic, model)
    return best[1]


@dataclass
class ForecastReport:
    """Per-origin one-step forecast errors and their trailing means."""

    horizons: tuple[int, ...]
    fe_bar: dict[int, float]
    origins: tuple[int, ...]
    fe: tuple[float, ...]
    skipped: tuple[tuple[int, str], ...]
    method: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "horizons": list(self.horizons),
            "fe_bar": {str(h): v for h, v in self.fe_bar.items()},
            "origins": list(self.origins),
            "fe": list(self.fe),
            "skipped": [list(s) for s in self.skipped],
        }


def _forecast_factor_block(series: np.ndarray, pmax: int) -> np.ndarray:
    """One-step forecasts of every scalar coordinate of a (w, p, r) stack."""
    w, p, r = series.shape
    out = np.empty((p, r))
    for i in range(p):
        for k in range(r):
            model = fit_ar_aic(series[:, i, k], pmax)
            out[i, k] = model.forecast(series[:, i, k])
    return out


def default_min_window(r1: int, r2: int) -> int:
    return max(40, 4 * max(r1, r2) + 20)


def forecast_expanding(
    x: np.ndarray,
    r1: int,
    r2: int,
    w0: int,
    horizons: tuple[int, ...],
    *,
    method: str = "mafm",
    vec_rank: int | None = None,
    min_window: int | None = None,
    pmax: int | None = None,
    eps: float = 1e-8,
    max_iter: int = 100,
) -> ForecastReport:
    """Expanding-window one-step-ahead forecast evaluation.

    At each origin w in w0..n-1 the model is refit on the first w slices
    only (a truncated copy, so later observations cannot leak), each factor
    coordinate is forecast with an AIC-selected autoregression, and the
    reconstruction is scored by the mean squared entry error. method picks
    the forecaster: "mafm", "vec" (vectorized PCA at vec_rank, default
    r1 + r2), or "mean" (grand mean of the training window).
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if method not in ("mafm", "vec", "mean"):
        raise ValueError(f"method must be one of mafm/vec/mean, got {method!r}")
    floor = default_min_window(r1, r2) if min_window is None else min_window
    if w0 < floor:
        raise ValueError(f"w0 must be >= the minimum window {floor}, got {w0}")
    if w0 > n - 1:
        raise ValueError(f"w0 must be <= n - 1 = {n - 1}, got {w0}")
    horizons = tuple(int(h) for h in horizons)
    if not horizons:
        raise ValueError("horizons must be nonempty")
    n_origins = n - w0
    for h in horizons:
        if not 1 <= h <= n_origins:
            raise ValueError(
                f"horizon {h} outside [1, {n_origins}] for w0={w0}, n={n}"
            )
    rank = vec_rank if vec_rank is not None else r1 + r2

    origins: list[int] = []
    fe: list[float] = []
    skipped: list[tuple[int, str]] = []
    for w in range(w0, n):
        xtr = x[:w].copy()
        pm = min(10, w // 10) if pmax is None else pmax
        try:
            if method == "mafm":
                fit = compas(xtr, r1, r2, mine(xtr, r1, r2), eps=eps,
                             max_iter=max_iter)
                f_next = _forecast_factor_block(fit.f, pm)
                g_next = _forecast_factor_block(fit.g, pm)
                xhat = f_next @ fit.u_a.cols.T + fit.u_b.cols @ g_next.T
            elif method == "vec":
                vfit = vec_factor_baseline(xtr, rank)
                fac_next = np.empty(rank)
                for k in range(rank):
                    model = fit_ar_aic(vfit.factors[:, k], pm)
                    fac_next[k] = model.forecast(vfit.factors[:, k])
                xhat = (vfit.loadings @ fac_next).reshape(d2, d1).T
            else:
                xhat = np.full((d1, d2), xtr.mean())
        except (DegenerateSignalError, np.linalg.LinAlgError) as exc:
            skipped.append((w, str(exc)))
            log.warning("forecast origin %d skipped: %s", w, exc)
            continue
        origins.append(w)
        fe.append(float(np.sum((x[w] - xhat) ** 2)) / (d1 * d2))

    fe_bar = {h: float(np.mean(fe[-h:])) if len(fe) >= 1 else float("nan")
              for h in horizons}
    return ForecastReport(
        horizons=horizons,
        fe_bar=fe_bar,
        origins=tuple(origins),
        fe=tuple(fe),
        skipped=tuple(skipped),
        method=method,
    )


@dataclass(frozen=True)
class VecFactorFit:
    """Principal-component fit of the vectorized panel."""

    loadings: np.ndarray  # (d1*d2, r), orthonormal columns
    factors: np.ndarray  # (n, r)
    fitted: np.ndarray  # (n, d1, d2)


def vec_factor_baseline(x: np.ndarray, r: int) -> VecFactorFit:
    """Flatten each slice column-wise and extract r principal components.

    The loadings are the top eigenvectors of the second-moment matrix of
    vec(X_t); fitted values project each vectorized slice onto their span.
    Interchangeable with the additive fit in insample_stats and
    forecast_expanding.
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if not 1 <= r <= d1 * d2:
        raise ValueError(f"need 1 <= r <= d1*d2 = {d1 * d2}, got {r}")
    vecs = np.ascontiguousarray(x.transpose(0, 2, 1)).reshape(n, d1 * d2)
    second_moment = vecs.T @ vecs / n
    _, basis = top_eigpairs(second_moment, r)
    factors = vecs @ basis.cols
    fitted_vec = factors @ basis.cols.T
    fitted = fitted_vec.reshape(n, d2, d1).transpose(0, 2, 1)
    return VecFactorFit(loadings=basis.cols, factors=factors, fitted=fitted)
