"""Two-stage loading-space estimation and factor recovery.

Stage one takes the top eigenvectors of the modewise sample Gram matrices
(1/n) sum X_t' X_t and (1/n) sum X_t X_t'. Stage two alternates: re-estimate
one mode's loading space from data projected onto the orthogonal complement
of the other mode's current estimate, which annihilates the cross-modal
signal, and repeat until the successive projector change falls below a
tolerance. Factors are recovered by projecting the data onto the estimated
signal subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import Basis, orth_complement, subspace_distance, top_eigpairs

__all__ = [
    "DegenerateSignalError",
    "MafmFit",
    "series_gram_cols",
    "series_gram_rows",
    "mine",
    "compas",
    "compas_partial",
    "estimate_factors",
    "fit_from_bases",
    "fitted_values",
    "doubly_orthogonal_component",
]

DEFAULT_EPS = 1e-8
DEFAULT_MAX_ITER = 100

# An r-th eigenvalue below this multiple of the mean eigenvalue means the
# requested rank exceeds the numerical rank of the Gram matrix.
RANK_GUARD = 1e-12


class DegenerateSignalError(ValueError):
    """Requested rank exceeds the numerical rank of a (projected) Gram matrix."""


@dataclass(frozen=True)
class MafmFit:
    """Estimated loading bases, factor series, and the refinement trace.

    trace holds one (column-step change, row-step change) pair per
    iteration, each measured as the sine distance between successive
    estimates of the corresponding loading space.
    """

    u_a: Basis
    u_b: Basis
    f: np.ndarray
    g: np.ndarray
    iterations: int
    trace: tuple[tuple[float, float], ...]
    converged: bool

    def __post_init__(self):
        if len(self.trace) != self.iterations:
            raise ValueError(
                f"trace length {len(self.trace)} != iterations {self.iterations}"
            )


def _check_series(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise ValueError(f"panel must have shape (n, d1, d2), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("panel entries must be finite")
    return x


def series_gram_cols(x: np.ndarray) -> np.ndarray:
    """(1/n) sum_t X_t' X_t, the d2 x d2 column-space Gram of the panel."""
    n, d1, d2 = x.shape
    flat = x.reshape(n * d1, d2)
    return flat.T @ flat / n


def series_gram_rows(x: np.ndarray) -> np.ndarray:
    """(1/n) sum_t X_t X_t', the d1 x d1 row-space Gram of the panel."""
    n, d1, d2 = x.shape
    flat = np.ascontiguousarray(x.transpose(0, 2, 1)).reshape(n * d2, d1)
    return flat.T @ flat / n


def _eig_guarded(gram: np.ndarray, r: int) -> Basis:
    vals, basis = top_eigpairs(gram, r)
    threshold = RANK_GUARD * np.trace(gram) / gram.shape[0]
    if vals[-1] <= threshold:
        raise DegenerateSignalError(
            f"rank-{r} signal requested but eigenvalue {r} is "
            f"{vals[-1]:.3e} (threshold {threshold:.3e}); "
            "the Gram matrix is numerically rank deficient"
        )
    return basis


def _project_right(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """X_t V for every t as one flat matmul."""
    n, d1, d2 = x.shape
    return (x.reshape(n * d1, d2) @ v).reshape(n, d1, -1)


def _project_right_transposed(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """X_t' V for every t as one flat matmul."""
    n, d1, d2 = x.shape
    flat = np.ascontiguousarray(x.transpose(0, 2, 1)).reshape(n * d2, d1)
    return (flat @ v).reshape(n, d2, -1)


def mine(x: np.ndarray, r1: int, r2: int) -> tuple[Basis, Basis]:
    """Initial loading-space estimates from the modewise Gram matrices.

    Returns (row-loading basis of size d2 x r1, column-loading basis of size
    d1 x r2), taken as the top eigenvectors of (1/n) sum X_t' X_t and
    (1/n) sum X_t X_t' respectively.
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if not 1 <= r1 < d2:
        raise ValueError(f"need 1 <= r1 < d2, got r1={r1}, d2={d2}")
    if not 1 <= r2 < d1:
        raise ValueError(f"need 1 <= r2 < d1, got r2={r2}, d1={d1}")
    u_a = _eig_guarded(series_gram_cols(x), r1)
    u_b = _eig_guarded(series_gram_rows(x), r2)
    return u_a, u_b


def _refine(
    x: np.ndarray,
    r1: int,
    r2: int,
    init: tuple[Basis, Basis],
    eps: float,
    max_iter: int,
    s1: int | None,
    s2: int | None,
) -> MafmFit:
    n, d1, d2 = x.shape
    u_a, u_b = init
    if (u_a.p, u_a.r) != (d2, r1) or (u_b.p, u_b.r) != (d1, r2):
        raise ValueError(
            f"init shapes {(u_a.cols.shape, u_b.cols.shape)} do not match "
            f"panel dims and ranks ({(d2, r1)}, {(d1, r2)})"
        )
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if max_iter < 0:
        raise ValueError(f"iteration cap must be >= 0, got {max_iter}")

    trace: list[tuple[float, float]] = []
    converged = False
    for _ in range(max_iter):
        a_perp = orth_complement(u_a).cols
        if s2 is not None:
            a_perp = a_perp[:, :s2]
        u_b_new = _eig_guarded(series_gram_rows(_project_right(x, a_perp)), r2)

        b_perp = orth_complement(u_b_new).cols
        if s1 is not None:
            b_perp = b_perp[:, :s1]
        u_a_new = _eig_guarded(
            series_gram_rows(_project_right_transposed(x, b_perp)), r1
        )

        delta_b = subspace_distance(u_b_new, u_b)
        delta_a = subspace_distance(u_a_new, u_a)
        trace.append((delta_b, delta_a))
        u_a, u_b = u_a_new, u_b_new
        if delta_b <= eps and delta_a <= eps:
            converged = True
            break

    f, g = estimate_factors(x, u_a, u_b)
    return MafmFit(
        u_a=u_a,
        u_b=u_b,
        f=f,
        g=g,
        iterations=len(trace),
        trace=tuple(trace),
        converged=converged,
    )


def compas(
    x: np.ndarray,
    r1: int,
    r2: int,
    init: tuple[Basis, Basis],
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MafmFit:
    """Alternating complement-projected refinement of the loading spaces.

    Each iteration updates the column-loading basis from data projected onto
    the complement of the previous row-loading estimate, then updates the
    row-loading basis using the complement of the estimate just produced.
    Stops once both successive projector changes are <= eps, or after
    max_iter iterations with converged=False. max_iter=0 returns init
    unchanged (with factors filled in).
    """
    x = _check_series(x)
    return _refine(x, r1, r2, init, eps, max_iter, s1=None, s2=None)


def compas_partial(
    x: np.ndarray,
    r1: int,
    r2: int,
    s1: int,
    s2: int,
    init: tuple[Basis, Basis],
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MafmFit:
    """Refinement that projects onto leading slices of the complements only.

    Uses the first s2 columns of the row-loading complement (size d2 - r1)
    and the first s1 columns of the column-loading complement (size
    d1 - r2). Statistically dominated by the full-complement refinement;
    s1 = d1 - r2, s2 = d2 - r1 reproduces it exactly.
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if not r2 <= s1 <= d1 - r2:
        raise ValueError(f"need r2 <= s1 <= d1 - r2, got s1={s1}, r2={r2}, d1={d1}")
    if not r1 <= s2 <= d2 - r1:
        raise ValueError(f"need r1 <= s2 <= d2 - r1, got s2={s2}, r1={r1}, d2={d2}")
    return _refine(x, r1, r2, init, eps, max_iter, s1=s1, s2=s2)


def estimate_factors(
    x: np.ndarray, u_a: Basis, u_b: Basis
) -> tuple[np.ndarray, np.ndarray]:
    """Recover factor series by projecting the panel onto the signal spaces.

    Row factors: F_t = (I - U_b U_b') X_t U_a. Column factors: G_t = X_t' U_b.
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if u_a.p != d2 or u_b.p != d1:
        raise ValueError(
            f"basis dims ({u_a.p}, {u_b.p}) do not match panel dims ({d2}, {d1})"
        )
    xu = _project_right(x, u_a.cols)
    if u_b.r == u_b.p:
        f = np.zeros_like(xu)
    else:
        f = xu - np.matmul(u_b.cols, np.matmul(u_b.cols.T, xu))
    g = np.matmul(x.transpose(0, 2, 1), u_b.cols)
    return f, g


def fit_from_bases(x: np.ndarray, u_a: Basis, u_b: Basis) -> MafmFit:
    """Wrap externally supplied loading bases as a fit, factors filled in."""
    f, g = estimate_factors(x, u_a, u_b)
    return MafmFit(
        u_a=u_a, u_b=u_b, f=f, g=g, iterations=0, trace=(), converged=True
    )


def doubly_orthogonal_component(
    x: np.ndarray, u_a: Basis, u_b: Basis
) -> np.ndarray:
    """(I - U_b U_b') X_t (I - U_a U_a') for every t.

    The part of the panel orthogonal to both loading spaces; identically
    zero when either basis spans its whole space.
    """
    x = _check_series(x)
    n, d1, d2 = x.shape
    if u_a.p != d2 or u_b.p != d1:
        raise ValueError(
            f"basis dims ({u_a.p}, {u_b.p}) do not match panel dims ({d2}, {d1})"
        )
    if u_a.r == u_a.p or u_b.r == u_b.p:
        return np.zeros_like(x)
    y = x - np.matmul(u_b.cols, np.matmul(u_b.cols.T, x))
    return y - np.matmul(np.matmul(y, u_a.cols), u_a.cols.T)


def fitted_values(x: np.ndarray, u_a: Basis, u_b: Basis) -> np.ndarray:
    """Panel minus its component orthogonal to both loading spaces."""
    return x - doubly_orthogonal_component(x, u_a, u_b)
