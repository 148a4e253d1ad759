"""Orthonormal-subspace primitives shared by estimation and inference.

Everything here is a pure function of its arguments: truncated symmetric
eigendecompositions, orthogonal complements, sine distances between spans,
and Procrustes alignment of bases.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Basis",
    "top_eigpairs",
    "top_eigvecs",
    "orth_complement",
    "subspace_distance",
    "procrustes_rotation",
    "random_orthonormal",
]

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class Basis:
    """A p x r matrix with orthonormal columns (1 <= r <= p).

    Represents an r-dimensional subspace of R^p through one of its
    orthonormal bases; only the column span carries meaning.
    """

    cols: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.cols, dtype=float)
        if cols.ndim != 2:
            raise ValueError(f"basis must be a 2-d array, got shape {cols.shape}")
        p, r = cols.shape
        if r < 1 or r > p:
            raise ValueError(f"basis rank must satisfy 1 <= r <= p, got p={p}, r={r}")
        if not np.all(np.isfinite(cols)):
            raise ValueError("basis entries must be finite")
        defect = np.max(np.abs(cols.T @ cols - np.eye(r)))
        if defect > ORTHONORMALITY_TOL:
            raise ValueError(
                f"columns are not orthonormal: max |U'U - I| = {defect:.3e}"
            )
        object.__setattr__(self, "cols", cols)

    @property
    def p(self) -> int:
        return self.cols.shape[0]

    @property
    def r(self) -> int:
        return self.cols.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector U U' onto the span."""
        return self.cols @ self.cols.T


def _fix_column_signs(vecs: np.ndarray) -> np.ndarray:
    # Deterministic representative: largest-magnitude entry of each column
    # is made positive (first such entry on ties).
    out = vecs.copy()
    for k in range(out.shape[1]):
        j = int(np.argmax(np.abs(out[:, k])))
        if out[j, k] < 0:
            out[:, k] = -out[:, k]
    return out


def top_eigpairs(s: np.ndarray, r: int) -> tuple[np.ndarray, Basis]:
    """Eigenvalues and eigenvectors of the r largest eigenvalues of symmetric s.

    The input is symmetrized as (S + S')/2 before decomposition. Eigenvalues
    come back in descending order; eigenvector signs follow the
    largest-magnitude-entry-positive convention.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("matrix entries must be finite")
    p = s.shape[0]
    if r < 1 or r > p:
        raise ValueError(f"rank must satisfy 1 <= r <= p, got r={r}, p={p}")
    w, v = np.linalg.eigh(0.5 * (s + s.T))
    vals = w[::-1][:r].copy()
    vecs = _fix_column_signs(v[:, ::-1][:, :r])
    return vals, Basis(vecs)


def top_eigvecs(s: np.ndarray, r: int) -> Basis:
    """Basis of the invariant subspace of the r largest eigenvalues of s."""
    return top_eigpairs(s, r)[1]


def orth_complement(u: Basis) -> Basis:
    """Orthonormal basis of the orthogonal complement of span(u), p x (p - r)."""
    if u.r == u.p:
        raise ValueError(f"complement is empty: basis already spans R^{u.p}")
    full, _, _ = np.linalg.svd(u.cols, full_matrices=True)
    return Basis(full[:, u.r :])


def subspace_distance(u: Basis, v: Basis) -> float:
    """Sine of the largest principal angle between span(u) and span(v).

    Equals the spectral norm of the projector difference ||UU' - VV'||_2,
    i.e. sqrt(1 - sigma_min(U'V)^2), evaluated as the largest singular value
    of (I - UU')V, which stays accurate down to distances near zero. Lies in
    [0, 1]: 0 iff the spans coincide, 1 iff some direction of one span is
    orthogonal to the other.
    """
    if (u.p, u.r) != (v.p, v.r):
        raise ValueError(
            f"bases must have identical shapes, got {u.cols.shape} and {v.cols.shape}"
        )
    a, b = u.cols, v.cols
    if np.array_equal(a, b):
        return 0.0
    # Canonical operand order: the swap u <-> v then runs the identical
    # float computation, making the distance exactly symmetric.
    if a.tobytes() > b.tobytes():
        a, b = b, a
    resid = b - a @ (a.T @ b)
    smax = np.linalg.svd(resid, compute_uv=False)[0]
    return float(min(max(smax, 0.0), 1.0))


def procrustes_rotation(u: Basis, uhat: Basis) -> np.ndarray:
    """Orthogonal r x r matrix R minimizing ||uhat - u R||_F.

    Computed from the SVD of u' uhat as (left factor) (right factor)'.
    Warns when u' uhat is numerically rank-deficient, in which case the
    minimizer is not unique (one of them is still returned).
    """
    if (u.p, u.r) != (uhat.p, uhat.r):
        raise ValueError(
            f"bases must have identical shapes, got {u.cols.shape} and {uhat.cols.shape}"
        )
    w, sing, vt = np.linalg.svd(u.cols.T @ uhat.cols)
    if sing[-1] < 1e-10:
        warnings.warn(
            "alignment is ambiguous: cross-Gram is rank-deficient "
            f"(smallest singular value {sing[-1]:.3e})",
            stacklevel=2,
        )
    return w @ vt


def random_orthonormal(p: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed p x r matrix with orthonormal columns (r = 0 allowed)."""
    if r < 0 or r > p:
        raise ValueError(f"need 0 <= r <= p, got p={p}, r={r}")
    if r == 0:
        return np.zeros((p, 0))
    q, rr = np.linalg.qr(rng.standard_normal((p, r)))
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    return q * signs
