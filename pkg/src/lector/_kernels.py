"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

The jitted path is the default. Set ``LECTOR_NUMBA=0`` to force the numpy
fallback (useful where numba is unavailable, and for benchmarking; see
``benchmarks/bench_kernels.py``). Both paths implement identical math; they
may differ in the last few ulps because of summation order.
"""

from __future__ import annotations

import os

import numpy as np


def _want_numba() -> bool:
    flag = os.environ.get("LECTOR_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# PageRank power iteration over an edge list.
#
# src/dst hold every directed edge (undirected graphs list both directions).
# Dangling nodes (out-degree 0) spread their mass uniformly, which keeps the
# scores a probability vector at every iteration.
# ---------------------------------------------------------------------------

def pagerank_edges_numpy(src, dst, n, damping, tol, max_iter):
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    x = np.full(n, 1.0 / n)
    out_deg = np.zeros(n)
    np.add.at(out_deg, src, 1.0)
    dangling = out_deg == 0.0
    inv_deg = np.zeros(n)
    inv_deg[~dangling] = 1.0 / out_deg[~dangling]
    base = (1.0 - damping) / n
    for it in range(1, max_iter + 1):
        contrib = np.zeros(n)
        np.add.at(contrib, dst, x[src] * inv_deg[src])
        dangling_mass = float(x[dangling].sum()) / n
        x_new = base + damping * (contrib + dangling_mass)
        err = float(np.abs(x_new - x).sum())
        x = x_new
        if err < tol:
            return x, True, it
    return x, False, max_iter


def _pagerank_edges_loops(src, dst, n, damping, tol, max_iter):
    x = np.full(n, 1.0 / n)
    out_deg = np.zeros(n)
    for e in range(src.shape[0]):
        out_deg[src[e]] += 1.0
    inv_deg = np.zeros(n)
    for v in range(n):
        if out_deg[v] > 0.0:
            inv_deg[v] = 1.0 / out_deg[v]
    base = (1.0 - damping) / n
    for it in range(1, max_iter + 1):
        contrib = np.zeros(n)
        for e in range(src.shape[0]):
            s = src[e]
            contrib[dst[e]] += x[s] * inv_deg[s]
        dangling_mass = 0.0
        for v in range(n):
            if out_deg[v] == 0.0:
                dangling_mass += x[v]
        dangling_mass /= n
        err = 0.0
        for v in range(n):
            new_v = base + damping * (contrib[v] + dangling_mass)
            err += abs(new_v - x[v])
            contrib[v] = new_v
        x = contrib
        if err < tol:
            return x, True, it
    return x, False, max_iter


# ---------------------------------------------------------------------------
# Logistic-regression full-batch gradient descent.
#
# Loss is the summed negative log-likelihood plus 0.5 * l2 * ||w||^2 (bias
# unpenalized); the update step uses the mean gradient (summed gradient over
# n samples). losses[e] is the loss *before* step e, losses[-1] the final
# loss, so the returned array has epochs + 1 entries.
# ---------------------------------------------------------------------------

def logreg_gd_numpy(X, y, lr, epochs, l2):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = X.shape
    w = np.zeros(m)
    b = 0.0
    losses = np.empty(epochs + 1)
    for e in range(epochs + 1):
        z = X @ w + b
        # softplus(z) - y*z, computed stably
        loss = float(np.sum(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y * z))
        loss += 0.5 * l2 * float(w @ w)
        losses[e] = loss
        if e == epochs:
            break
        p = np.empty(n)
        pos = z >= 0
        p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        p[~pos] = ez / (1.0 + ez)
        r = p - y
        w = w - lr * (X.T @ r + l2 * w) / n
        b = b - lr * float(r.sum()) / n
    return w, b, losses


def _logreg_gd_loops(X, y, lr, epochs, l2):
    n, m = X.shape
    w = np.zeros(m)
    b = 0.0
    losses = np.empty(epochs + 1)
    p = np.empty(n)
    for e in range(epochs + 1):
        loss = 0.0
        for i in range(n):
            z = b
            for j in range(m):
                z += X[i, j] * w[j]
            if z >= 0.0:
                loss += z + np.log1p(np.exp(-z)) - y[i] * z
                p[i] = 1.0 / (1.0 + np.exp(-z))
            else:
                loss += np.log1p(np.exp(z)) - y[i] * z
                ez = np.exp(z)
                p[i] = ez / (1.0 + ez)
        reg = 0.0
        for j in range(m):
            reg += w[j] * w[j]
        losses[e] = loss + 0.5 * l2 * reg
        if e == epochs:
            break
        for j in range(m):
            g = l2 * w[j]
            for i in range(n):
                g += X[i, j] * (p[i] - y[i])
            w[j] -= lr * g / n
        gb = 0.0
        for i in range(n):
            gb += p[i] - y[i]
        b -= lr * gb / n
    return w, b, losses


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

ACTIVE_BACKEND = "numpy"
_pagerank_impl = pagerank_edges_numpy
_logreg_impl = logreg_gd_numpy
pagerank_edges_numba = None
logreg_gd_numba = None

if _want_numba():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
    if njit is not None:
        pagerank_edges_numba = njit(cache=True)(_pagerank_edges_loops)
        logreg_gd_numba = njit(cache=True)(_logreg_gd_loops)
        _pagerank_impl = pagerank_edges_numba
        _logreg_impl = logreg_gd_numba
        ACTIVE_BACKEND = "numba"


def pagerank_edges(src, dst, n, damping=0.85, tol=1e-6, max_iter=100):
    """Run power iteration on the active backend.

    Returns (scores, converged, iterations); scores are a probability vector.
    """
    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    return _pagerank_impl(src, dst, int(n), float(damping), float(tol), int(max_iter))


def logreg_gd(X, y, lr, epochs, l2):
    """Train logistic-regression weights on the active backend.

    Returns (weights, bias, losses) with losses of length epochs + 1.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _logreg_impl(X, y, float(lr), int(epochs), float(l2))
