import numpy as np

from mafm.infer import residual_series


def brute_force_row_cov(x, fit, row, mode):
    """Signal-by-noise row covariance via the materialized residual covariance.

    Builds the full d1*d2 x d1*d2 residual second-moment matrix and evaluates
    the Kronecker sandwich term by term. Only feasible for tiny panels; used
    as the independent oracle for the streaming implementation.
    """
    n, d1, d2 = x.shape
    resid = residual_series(x, fit)
    pa = np.eye(d2) - fit.u_a.cols @ fit.u_a.cols.T
    pb = np.eye(d1) - fit.u_b.cols @ fit.u_b.cols.T
    if mode == "A":
        vecs = np.stack([resid[s].flatten(order="F") for s in range(n)])
        sig_e = vecs.T @ vecs / n
        e = np.zeros(d2)
        e[row] = 1.0
        r = fit.u_a.r
        acc = np.zeros((r, r))
        for t in range(n):
            left = np.kron((e @ pa)[None, :], fit.f[t].T @ pb)
            acc += left @ sig_e @ left.T
        return acc / n
    vecs = np.stack([resid[s].T.flatten(order="F") for s in range(n)])
    sig_et = vecs.T @ vecs / n
    e = np.zeros(d1)
    e[row] = 1.0
    r = fit.u_b.r
    acc = np.zeros((r, r))
    for t in range(n):
        left = np.kron((e @ pb)[None, :], fit.g[t].T @ pa)
        acc += left @ sig_et @ left.T
    return acc / n
