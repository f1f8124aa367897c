"""Compiled coordinate-descent kernels for penalized least squares.

All kernels minimise

    (1/2n) ||y - X b||^2 + sum_j P(|b_j|; lam * pf_j)

using Gram-matrix ("covariance") updates, so one sweep costs O(p^2)
regardless of n.  ``pf_j = inf`` pins coordinate j at zero.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LASSO = 0
SCAD = 1
MCP = 2


@njit(cache=True, nogil=True)
def threshold(z, a, lam, penalty, param):
    """Minimiser of ``a/2 b^2 - z b + P(|b|)`` for a single coordinate.

    ``a`` is the coordinate's curvature ``||x_j||^2 / n``.  For SCAD
    (``param`` = a > 2) and MCP (``param`` = gamma > 1) the scalar problem is
    convex as long as ``a > 1/(param - 1)`` resp. ``a > 1/param``, which holds
    for standardized columns.
    """
    az = abs(z)
    if az <= lam:
        return 0.0
    s = 1.0 if z > 0 else -1.0
    if penalty == LASSO:
        return s * (az - lam) / a
    if penalty == MCP:
        g = param
        if az <= a * g * lam:
            return s * (az - lam) / (a - 1.0 / g)
        return z / a
    # SCAD
    t = param
    if az <= lam * (a + 1.0):
        return s * (az - lam) / a
    if az <= a * t * lam:
        return s * ((t - 1.0) * az - t * lam) / ((t - 1.0) * a - 1.0)
    return z / a


@njit(cache=True, nogil=True)
def cd_path(G, c, lambdas, pf, penalty, param, tol, max_sweeps, beta0):
    """Solve along ``lambdas`` with warm starts.

    Returns ``(betas, sweeps)``; ``sweeps[l] = -1`` flags a point where the
    sweep limit was hit before the max coefficient change fell below ``tol``.
    """
    p = G.shape[0]
    L = lambdas.shape[0]
    beta = beta0.copy()
    q = G @ beta
    betas = np.zeros((L, p))
    sweeps = np.zeros(L, dtype=np.int64)
    for l in range(L):
        lam = lambdas[l]
        dmax = np.inf
        it = 0
        while it < max_sweeps:
            it += 1
            dmax = 0.0
            for j in range(p):
                if not np.isfinite(pf[j]):
                    continue
                a = G[j, j]
                bj = beta[j]
                z = c[j] - q[j] + a * bj
                b = threshold(z, a, lam * pf[j], penalty, param)
                d = b - bj
                if d != 0.0:
                    for k in range(p):
                        q[k] += G[k, j] * d
                    beta[j] = b
                    if abs(d) > dmax:
                        dmax = abs(d)
            if dmax < tol:
                break
        sweeps[l] = it if dmax < tol else -1
        betas[l, :] = beta
    return betas, sweeps


@njit(cache=True, nogil=True)
def cv_errors(X, y, folds, n_folds, lambdas, pf, penalty, param, tol, max_sweeps):
    """Mean out-of-fold squared error for every lambda, plus a convergence flag."""
    n, p = X.shape
    L = lambdas.shape[0]
    sse = np.zeros(L)
    ok = True
    for k in range(n_folds):
        train = folds != k
        Xtr = X[train]
        ytr = y[train]
        Xte = X[~train]
        yte = y[~train]
        ntr = Xtr.shape[0]
        G = (Xtr.T @ Xtr) / ntr
        c = (Xtr.T @ ytr) / ntr
        betas, sweeps = cd_path(G, c, lambdas, pf, penalty, param, tol, max_sweeps, np.zeros(p))
        for l in range(L):
            if sweeps[l] < 0:
                ok = False
        pred = Xte @ betas.T
        for l in range(L):
            r = yte - pred[:, l]
            sse[l] += r @ r
    return sse / n, ok
