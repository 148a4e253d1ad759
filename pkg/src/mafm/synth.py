"""Synthetic matrix-panel generator with ground truth retained.

Panels follow the additive row/column factor structure
X_t = F_t A' + B G_t' + E_t. Factor rows evolve as independent VAR(1)
processes with per-row coefficient matrices; loadings are shaped by SVD so
their singular values follow configurable strength exponents; noise entries
are i.i.d. Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .linalg import Basis, random_orthonormal

__all__ = [
    "DEFAULT_EIGEN_POOL",
    "SimConfig",
    "SimTruth",
    "gen_loading",
    "gen_var1_coeff",
    "simulate",
    "signal_components",
    "substream",
]

# Pairs of VAR(1) eigenvalues covering highly persistent, moderately
# persistent, and oscillatory row dynamics.
DEFAULT_EIGEN_POOL = ((0.90, 0.70), (0.50, -0.50), (-0.90, -0.70))


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent, order-insensitive random stream keyed by (seed, *path)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))
    )


@dataclass(frozen=True)
class SimConfig:
    """Configuration of one synthetic panel draw.

    r1/r2 may be zero to produce single-mode (or pure-noise) test fixtures;
    the estimators themselves require ranks >= 1.
    """

    d1: int
    d2: int
    r1: int
    r2: int
    n: int
    delta0: float = 0.0
    delta1: float = 0.0
    sigma_eps: float = 1.0
    eigen_pool: tuple[tuple[float, float], ...] = DEFAULT_EIGEN_POOL
    burn_in: int = 200
    seed: int = 0

    def __post_init__(self):
        pool = tuple(tuple(float(p) for p in pair) for pair in self.eigen_pool)
        object.__setattr__(self, "eigen_pool", pool)
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError(f"d1 and d2 must be >= 1, got d1={self.d1}, d2={self.d2}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got n={self.n}")
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError(f"r1 and r2 must be >= 0, got r1={self.r1}, r2={self.r2}")
        if self.r1 >= self.d2:
            raise ValueError(
                f"r1 must be < d2 so the row-loading complement is nonempty "
                f"(got r1={self.r1}, d2={self.d2})"
            )
        if self.r2 >= self.d1:
            raise ValueError(
                f"r2 must be < d1 so the column-loading complement is nonempty "
                f"(got r2={self.r2}, d1={self.d1})"
            )
        if not 0.0 <= self.delta0 <= self.delta1 < 1.0:
            raise ValueError(
                f"loading exponents must satisfy 0 <= delta0 <= delta1 < 1, "
                f"got delta0={self.delta0}, delta1={self.delta1}"
            )
        if self.sigma_eps < 0:
            raise ValueError(f"sigma_eps must be >= 0, got {self.sigma_eps}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        if not pool:
            raise ValueError("eigen_pool must be nonempty")
        for pair in pool:
            if len(pair) != 2:
                raise ValueError(f"eigen_pool entries must be pairs, got {pair}")
            if max(abs(pair[0]), abs(pair[1])) >= 1:
                raise ValueError(
                    f"eigen_pool values must have |phi| < 1 for stationarity, got {pair}"
                )

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["eigen_pool"] = [list(p) for p in self.eigen_pool]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(doc)
        if "eigen_pool" in kwargs:
            kwargs["eigen_pool"] = tuple(tuple(p) for p in kwargs["eigen_pool"])
        return cls(**kwargs)


@dataclass(frozen=True)
class SimTruth:
    """Ground truth of one synthetic replicate.

    f and g hold the canonical factors (raw factors folded with the loading
    SVD pieces) so that the signal is f_t u_a' + u_b g_t'. noise stores the
    panel minus both signal components, evaluated with the same operations
    as :func:`signal_components`, making the decomposition identity exact at
    the float level.
    """

    a: np.ndarray
    b: np.ndarray
    u_a: Basis | None
    u_b: Basis | None
    f: np.ndarray
    g: np.ndarray
    noise: np.ndarray
    phi_f: np.ndarray
    phi_g: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray
    sigma_eps: float


def gen_loading(
    d: int, r: int, delta0: float, delta1: float, rng: np.random.Generator
) -> np.ndarray:
    """Random d x r loading with geometrically spaced singular values.

    Singular values run from d^((1-delta0)/2) (largest) down to
    d^((1-delta1)/2); the orthonormal factors are Haar draws. r = 1 uses the
    larger endpoint, r = 0 returns an empty matrix.
    """
    if r < 0 or r > d:
        raise ValueError(f"need 0 <= r <= d, got d={d}, r={r}")
    if not 0.0 <= delta0 <= delta1 < 1.0:
        raise ValueError(
            f"need 0 <= delta0 <= delta1 < 1, got delta0={delta0}, delta1={delta1}"
        )
    if r == 0:
        return np.zeros((d, 0))
    u = random_orthonormal(d, r, rng)
    w = random_orthonormal(r, r, rng)
    sv = np.geomspace(d ** ((1.0 - delta0) / 2.0), d ** ((1.0 - delta1) / 2.0), num=r)
    return u @ (sv[:, None] * w.T)


def gen_var1_coeff(
    r: int, eigen_pool: tuple[tuple[float, float], ...], rng: np.random.Generator
) -> np.ndarray:
    """Random VAR(1) coefficient Q D Q' with eigenvalues from one pool pair.

    D repeats phi1 ceil(r/2) times and phi2 for the remainder; Q is a Haar
    orthogonal matrix, so the spectral radius is max(|phi1|, |phi2|) < 1.
    """
    pool = tuple(eigen_pool)
    if not pool:
        raise ValueError("eigen_pool must be nonempty")
    for pair in pool:
        if max(abs(pair[0]), abs(pair[1])) >= 1:
            raise ValueError(f"eigen_pool values must have |phi| < 1, got {pair}")
    phi1, phi2 = pool[int(rng.integers(len(pool)))]
    k = math.ceil(r / 2)
    diag = np.concatenate([np.full(k, phi1), np.full(r - k, phi2)])
    q = random_orthonormal(r, r, rng)
    coeff = (q * diag) @ q.T
    radius = np.max(np.abs(np.linalg.eigvals(coeff)))
    assert radius < 1.0, f"unstable VAR coefficient, spectral radius {radius}"
    return coeff


def _var1_rows(
    n_rows: int,
    r: int,
    n: int,
    eigen_pool,
    burn_in: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """VAR(1) paths, one independent process per row, burn-in discarded.

    Returns (factors, coeffs) with factors of shape (n, n_rows, r).
    """
    if r == 0:
        return np.zeros((n, n_rows, 0)), np.zeros((n_rows, 0, 0))
    coeffs = np.stack([gen_var1_coeff(r, eigen_pool, rng) for _ in range(n_rows)])
    state = rng.standard_normal((n_rows, r))
    out = np.empty((n, n_rows, r))
    for t in range(burn_in + n):
        state = np.einsum("irs,is->ir", coeffs, state) + rng.standard_normal(
            (n_rows, r)
        )
        if t >= burn_in:
            out[t - burn_in] = state
    return out, coeffs


def _signal_parts(
    u_a_cols: np.ndarray | None,
    f: np.ndarray,
    u_b_cols: np.ndarray | None,
    g: np.ndarray,
    d1: int,
    d2: int,
) -> tuple[np.ndarray, np.ndarray]:
    n = f.shape[0]
    if u_a_cols is None or u_a_cols.shape[1] == 0:
        sa = np.zeros((n, d1, d2))
    else:
        sa = f @ u_a_cols.T
    if u_b_cols is None or u_b_cols.shape[1] == 0:
        sb = np.zeros((n, d1, d2))
    else:
        sb = np.matmul(u_b_cols, g.transpose(0, 2, 1))
    return sa, sb


def signal_components(truth: SimTruth) -> tuple[np.ndarray, np.ndarray]:
    """Row-factor and column-factor signal series (f_t u_a', u_b g_t').

    Uses the same float operations as :func:`simulate`, so
    x - sa - sb == truth.noise holds bitwise.
    """
    d1 = truth.f.shape[1]
    d2 = truth.g.shape[1]
    u_a = truth.u_a.cols if truth.u_a is not None else None
    u_b = truth.u_b.cols if truth.u_b is not None else None
    return _signal_parts(u_a, truth.f, u_b, truth.g, d1, d2)


def simulate(
    cfg: SimConfig,
    *,
    loadings: tuple[np.ndarray, np.ndarray] | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, SimTruth]:
    """Draw one panel (n, d1, d2) and its ground truth.

    Fully deterministic given cfg.seed; pass rng to drive the draw from an
    external substream instead, and loadings=(a, b) to reuse fixed loading
    matrices across replicates.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if loadings is None:
        a = gen_loading(cfg.d2, cfg.r1, cfg.delta0, cfg.delta1, rng)
        b = gen_loading(cfg.d1, cfg.r2, cfg.delta0, cfg.delta1, rng)
    else:
        a, b = (np.asarray(m, dtype=float) for m in loadings)
        if a.shape != (cfg.d2, cfg.r1) or b.shape != (cfg.d1, cfg.r2):
            raise ValueError(
                f"loadings must have shapes ({cfg.d2}, {cfg.r1}) and "
                f"({cfg.d1}, {cfg.r2}), got {a.shape} and {b.shape}"
            )

    u_a, t_a = _canonical_pieces(a)
    u_b, t_b = _canonical_pieces(b)

    f_raw, phi_f = _var1_rows(
        cfg.d1, cfg.r1, cfg.n, cfg.eigen_pool, cfg.burn_in, rng
    )
    g_raw, phi_g = _var1_rows(
        cfg.d2, cfg.r2, cfg.n, cfg.eigen_pool, cfg.burn_in, rng
    )
    f = f_raw @ t_a
    g = g_raw @ t_b

    u_a_cols = u_a.cols if u_a is not None else None
    u_b_cols = u_b.cols if u_b is not None else None
    sa, sb = _signal_parts(u_a_cols, f, u_b_cols, g, cfg.d1, cfg.d2)
    if cfg.sigma_eps > 0:
        eps = cfg.sigma_eps * rng.standard_normal((cfg.n, cfg.d1, cfg.d2))
    else:
        eps = np.zeros((cfg.n, cfg.d1, cfg.d2))
    x = sa + sb + eps
    noise = x - sa - sb

    truth = SimTruth(
        a=a,
        b=b,
        u_a=u_a,
        u_b=u_b,
        f=f,
        g=g,
        noise=noise,
        phi_f=phi_f,
        phi_g=phi_g,
        t_a=t_a,
        t_b=t_b,
        sigma_eps=cfg.sigma_eps,
    )
    return x, truth


def _canonical_pieces(loading: np.ndarray) -> tuple[Basis | None, np.ndarray]:
    """Left singular basis and factor-side transform of a loading matrix.

    With loading = U diag(s) W', raw factors fold into canonical ones via
    t = W diag(s): F_raw @ loading' == (F_raw @ t) @ U'.
    """
    r = loading.shape[1]
    if r == 0:
        return None, np.zeros((0, 0))
    u, s, vt = np.linalg.svd(loading, full_matrices=False)
    if s[-1] <= 0:
        raise ValueError("loading matrix is rank deficient")
    return Basis(u), vt.T * s[None, :]
