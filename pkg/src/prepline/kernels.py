"""Hot numeric kernels: numba-jitted inner loops with a pure-numpy fallback.

The loop-bound kernels (full-batch logistic-regression descent and the
quadratic pairwise-spread transform) carry ``@njit`` implementations.
Set ``PREPLINE_PURE_NUMPY=1`` to force the numpy path; the default is
numba whenever it imports.  Each path is deterministic on its own; the
two paths agree to float tolerance but not bit-for-bit (BLAS vs serial
summation order).  ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("PREPLINE_PURE_NUMPY", "").strip() not in ("", "0")

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USING_NUMBA = _HAVE_NUMBA and not _FORCE_NUMPY


def backend_name():
    return "numba" if USING_NUMBA else "numpy"


def _sigmoid_np(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logreg_fit_np(X, y, lr, iters, l2, clip):
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(iters):
        p = _sigmoid_np(X @ w + b)
        err = p - y
        gw = X.T @ err / n + l2 * w
        gb = err.mean()
        norm = np.sqrt(gw @ gw + gb * gb)
        if norm > clip:
            scale = clip / norm
            gw *= scale
            gb *= scale
        w -= lr * gw
        b -= lr * gb
    return w, b


def _pairwise_spread_np(x):
    n = x.shape[0]
    out = np.empty(n)
    chunk = 256
    for start in range(0, n, chunk):
        block = x[start:start + chunk]
        out[start:start + chunk] = np.abs(block[:, None] - x[None, :]).sum(axis=1)
    return out / n


if _HAVE_NUMBA:

    @njit(cache=True)
    def _logreg_fit_nb(X, y, lr, iters, l2, clip):  # pragma: no cover - exercised via dispatch
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        p = np.empty(n)
        gw = np.empty(d)
        for _ in range(iters):
            for i in range(n):
                z = b
                for j in range(d):
                    z += X[i, j] * w[j]
                if z >= 0.0:
                    p[i] = 1.0 / (1.0 + np.exp(-z))
                else:
                    ez = np.exp(z)
                    p[i] = ez / (1.0 + ez)
            gb = 0.0
            for j in range(d):
                gw[j] = 0.0
            for i in range(n):
                err = p[i] - y[i]
                gb += err
                for j in range(d):
                    gw[j] += X[i, j] * err
            gb /= n
            sq = gb * gb
            for j in range(d):
                gw[j] = gw[j] / n + l2 * w[j]
                sq += gw[j] * gw[j]
            norm = np.sqrt(sq)
            if norm > clip:
                scale = clip / norm
                gb *= scale
                for j in range(d):
                    gw[j] *= scale
            b -= lr * gb
            for j in range(d):
                w[j] -= lr * gw[j]
        return w, b

    @njit(cache=True, parallel=True)
    def _pairwise_spread_nb(x):  # pragma: no cover - exercised via dispatch
        n = x.shape[0]
        out = np.empty(n)
        for i in prange(n):
            s = 0.0
            xi = x[i]
            for j in range(n):
                s += abs(xi - x[j])
            out[i] = s / n
        return out


def logreg_fit(X, y, lr=0.05, iters=300, l2=1e-3, clip=10.0):
    """Full-batch gradient descent from zero-initialized weights.

    Per-step gradient (weights and bias jointly) is L2-norm clipped.
    L2 penalty applies to weights only, never the bias.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if USING_NUMBA:
        return _logreg_fit_nb(X, y, float(lr), int(iters), float(l2), float(clip))
    return _logreg_fit_np(X, y, float(lr), int(iters), float(l2), float(clip))


def pairwise_spread(x):
    """Mean absolute difference of each element against the full column.

    Deliberately O(n^2): the expensive transform used to exercise the
    cache planner on large inputs.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if USING_NUMBA:
        return _pairwise_spread_nb(x)
    return _pairwise_spread_np(x)


def sigmoid(z):
    return _sigmoid_np(np.asarray(z, dtype=np.float64))
