"""Hot numeric kernels: log-PL objectives, gradients, and Gibbs sweeps.

Two interchangeable backends with identical signatures:

* ``numba`` (default when importable): the loops below compiled with
  ``@njit(cache=True)``.  Best for the optimizer's repeated objective and
  gradient evaluations and for the strictly sequential Gibbs chains.
* ``numpy``: vectorized fallback, no compilation step.

Selection is made once at import time from the ``PSEUDOLIK_BACKEND``
environment variable (``auto``/``numba``/``numpy``; default ``auto``).
``active_backend()`` reports the live choice.  Both implementations of every
kernel are importable directly (``*_numpy`` / ``*_numba`` suffixes) so tests
and ``benchmarks/bench_kernels.py`` can compare them in one process.

Data conventions: ``X`` is an (n, q) float64 array of {0,1} states, ``w`` an
(n,) float64 weight vector (observation counts).  FVBM couplings ``M`` are
symmetric with a zero diagonal; RBM couplings are (q, r) with visible bias
``a`` (q,) and hidden bias ``b`` (r,).  Gibbs kernels consume a pre-drawn
uniform array so that the random stream is owned by the caller.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_CHOICE = os.environ.get("PSEUDOLIK_BACKEND", "auto").strip().lower()
if _CHOICE not in ("auto", "numba", "numpy"):
    raise ValueError(f"PSEUDOLIK_BACKEND must be auto, numba, or numpy, got {_CHOICE!r}")

_HAVE_NUMBA = False
if _CHOICE in ("auto", "numba"):
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _CHOICE == "numba":
            raise
        warnings.warn("numba not importable; falling back to the numpy backend")

if not _HAVE_NUMBA:

    def njit(*args, **kwargs):
        # identity decorator so the jit definitions below stay importable
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def active_backend() -> str:
    """Backend the dispatched kernel names point at: 'numba' or 'numpy'."""
    return "numba" if _HAVE_NUMBA and _CHOICE != "numpy" else "numpy"


# ---------------------------------------------------------------------------
# scalar helpers (numpy versions vectorize the same branch structure)
# ---------------------------------------------------------------------------


def softplus(x):
    """log(1 + exp(x)) without overflow: x + log1p(exp(-x)) on the positive branch."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0.0, x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(x):
    """1 / (1 + exp(-x)) evaluated on the non-overflowing branch."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@njit(cache=True)
def _softplus1(x: float) -> float:
    if x > 0.0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(cache=True)
def _sigmoid1(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    ex = np.exp(x)
    return ex / (1.0 + ex)


# ---------------------------------------------------------------------------
# FVBM objective: sum_i w_i sum_k [x_ik a_ik - softplus(a_ik)],
# a_ik = m_k . x_i + b_k
# ---------------------------------------------------------------------------


def fvbm_logpl_numpy(X, w, M, b) -> float:
    A = X @ M + b
    return float(np.sum(w[:, None] * (X * A - softplus(A))))


def fvbm_logpl_grad_numpy(X, w, M, b):
    A = X @ M + b
    val = float(np.sum(w[:, None] * (X * A - softplus(A))))
    R = w[:, None] * (X - sigmoid(A))
    G = X.T @ R
    D = G + G.T
    np.fill_diagonal(D, 0.0)
    return val, D, R.sum(axis=0)


@njit(cache=True)
def fvbm_logpl_numba(X, w, M, b) -> float:
    n, q = X.shape
    val = 0.0
    for i in range(n):
        for k in range(q):
            a = b[k]
            for l in range(q):
                a += M[k, l] * X[i, l]
            val += w[i] * (X[i, k] * a - _softplus1(a))
    return val


@njit(cache=True)
def fvbm_logpl_grad_numba(X, w, M, b):
    n, q = X.shape
    val = 0.0
    G = np.zeros((q, q))
    gb = np.zeros(q)
    for i in range(n):
        for k in range(q):
            a = b[k]
            for l in range(q):
                a += M[k, l] * X[i, l]
            val += w[i] * (X[i, k] * a - _softplus1(a))
            r = w[i] * (X[i, k] - _sigmoid1(a))
            gb[k] += r
            for l in range(q):
                G[l, k] += r * X[i, l]
    D = np.zeros((q, q))
    for k in range(q):
        for l in range(q):
            if l != k:
                D[k, l] = G[k, l] + G[l, k]
    return val, D, gb


# ---------------------------------------------------------------------------
# RBM objective over the visible conditionals.  With hidden activations
# g_j = m_j . x + b_j the log odds of coordinate k being 1 given the rest is
#   delta_k = a_k + sum_j [softplus(g_j with x_k=1) - softplus(g_j with x_k=0)]
# and the per-site term is x_k delta_k - softplus(delta_k).
# ---------------------------------------------------------------------------


def rbm_logpl_numpy(X, w, M, a, b) -> float:
    G = X @ M + b
    val = 0.0
    for k in range(X.shape[1]):
        G0 = G - X[:, k, None] * M[k]
        delta = a[k] + (softplus(G0 + M[k]) - softplus(G0)).sum(axis=1)
        val += float(np.sum(w * (X[:, k] * delta - softplus(delta))))
    return val


def rbm_logpl_grad_numpy(X, w, M, a, b):
    n, q = X.shape
    G = X @ M + b
    S = sigmoid(G)
    val = 0.0
    gM = np.zeros_like(M)
    ga = np.zeros(q)
    gb = np.zeros(M.shape[1])
    for k in range(q):
        xk = X[:, k]
        G0 = G - xk[:, None] * M[k]
        G1 = G0 + M[k]
        delta = a[k] + (softplus(G1) - softplus(G0)).sum(axis=1)
        val += float(np.sum(w * (xk * delta - softplus(delta))))
        p1 = sigmoid(delta)
        resid = w * (xk - p1)
        ga[k] = resid.sum()
        S0 = sigmoid(G0)
        S1 = sigmoid(G1)
        D = S - ((1.0 - p1)[:, None] * S0 + p1[:, None] * S1)
        wD = w[:, None] * D
        gb += wD.sum(axis=0)
        gM += X.T @ wD
        gM[k] += resid @ S1 - xk @ wD
    return val, gM, ga, gb


@njit(cache=True)
def rbm_logpl_numba(X, w, M, a, b) -> float:
    n, q = X.shape
    r = M.shape[1]
    val = 0.0
    g = np.empty(r)
    for i in range(n):
        for j in range(r):
            s = b[j]
            for l in range(q):
                s += M[l, j] * X[i, l]
            g[j] = s
        for k in range(q):
            xk = X[i, k]
            delta = a[k]
            for j in range(r):
                g0 = g[j] - M[k, j] * xk
                delta += _softplus1(g0 + M[k, j]) - _softplus1(g0)
            val += w[i] * (xk * delta - _softplus1(delta))
    return val


@njit(cache=True)
def rbm_logpl_grad_numba(X, w, M, a, b):
    n, q = X.shape
    r = M.shape[1]
    val = 0.0
    gM = np.zeros((q, r))
    ga = np.zeros(q)
    gb = np.zeros(r)
    g = np.empty(r)
    g0 = np.empty(r)
    g1 = np.empty(r)
    for i in range(n):
        for j in range(r):
            s = b[j]
            for l in range(q):
                s += M[l, j] * X[i, l]
            g[j] = s
        for k in range(q):
            xk = X[i, k]
            delta = a[k]
            for j in range(r):
                base = g[j] - M[k, j] * xk
                g0[j] = base
                g1[j] = base + M[k, j]
                delta += _softplus1(g1[j]) - _softplus1(g0[j])
            val += w[i] * (xk * delta - _softplus1(delta))
            p1 = _sigmoid1(delta)
            resid = w[i] * (xk - p1)
            ga[k] += resid
            for j in range(r):
                sg = _sigmoid1(g[j])
                s0 = _sigmoid1(g0[j])
                s1 = _sigmoid1(g1[j])
                d = sg - ((1.0 - p1) * s0 + p1 * s1)
                gb[j] += w[i] * d
                gM[k, j] += resid * s1
                for l in range(q):
                    if l != k:
                        gM[l, j] += w[i] * X[i, l] * d
    return val, gM, ga, gb


# ---------------------------------------------------------------------------
# Gibbs chains: systematic single-site scans in coordinate order.
# u holds (burn_sweeps + n_keep * sweeps_per_draw) * q uniforms, consumed in order.
# ---------------------------------------------------------------------------


def gibbs_chain_fvbm_numpy(M, b, x0, n_keep, sweeps_per_draw, burn_sweeps, u):
    q = x0.shape[0]
    x = x0.astype(np.float64).copy()
    out = np.empty((n_keep, q), dtype=np.int64)
    t = 0
    total_sweeps = burn_sweeps + n_keep * sweeps_per_draw
    kept = 0
    for sweep in range(total_sweeps):
        for k in range(q):
            p1 = sigmoid(np.array([float(np.dot(M[k], x)) + b[k]]))[0]
            x[k] = 1.0 if u[t] < p1 else 0.0
            t += 1
        if sweep >= burn_sweeps and (sweep - burn_sweeps + 1) % sweeps_per_draw == 0:
            out[kept] = x.astype(np.int64)
            kept += 1
    return out


@njit(cache=True)
def gibbs_chain_fvbm_numba(M, b, x0, n_keep, sweeps_per_draw, burn_sweeps, u):
    q = x0.shape[0]
    x = x0.astype(np.float64)
    out = np.empty((n_keep, q), dtype=np.int64)
    t = 0
    total_sweeps = burn_sweeps + n_keep * sweeps_per_draw
    kept = 0
    for sweep in range(total_sweeps):
        for k in range(q):
            act = b[k]
            for l in range(q):
                act += M[k, l] * x[l]
            p1 = _sigmoid1(act)
            x[k] = 1.0 if u[t] < p1 else 0.0
            t += 1
        if sweep >= burn_sweeps and (sweep - burn_sweeps + 1) % sweeps_per_draw == 0:
            for k in range(q):
                out[kept, k] = np.int64(x[k])
            kept += 1
    return out


def gibbs_chain_rbm_numpy(M, a, b, x0, n_keep, sweeps_per_draw, burn_sweeps, u):
    q = x0.shape[0]
    x = x0.astype(np.float64).copy()
    out = np.empty((n_keep, q), dtype=np.int64)
    g = x @ M + b
    t = 0
    total_sweeps = burn_sweeps + n_keep * sweeps_per_draw
    kept = 0
    for sweep in range(total_sweeps):
        for k in range(q):
            g0 = g - M[k] * x[k]
            delta = a[k] + float((softplus(g0 + M[k]) - softplus(g0)).sum())
            p1 = sigmoid(np.array([delta]))[0]
            new = 1.0 if u[t] < p1 else 0.0
            g = g0 + M[k] * new
            x[k] = new
            t += 1
        if sweep >= burn_sweeps and (sweep - burn_sweeps + 1) % sweeps_per_draw == 0:
            out[kept] = x.astype(np.int64)
            kept += 1
    return out


@njit(cache=True)
def gibbs_chain_rbm_numba(M, a, b, x0, n_keep, sweeps_per_draw, burn_sweeps, u):
    q = x0.shape[0]
    r = M.shape[1]
    x = x0.astype(np.float64)
    out = np.empty((n_keep, q), dtype=np.int64)
    g = np.empty(r)
    for j in range(r):
        s = b[j]
        for l in range(q):
            s += M[l, j] * x[l]
        g[j] = s
    t = 0
    total_sweeps = burn_sweeps + n_keep * sweeps_per_draw
    kept = 0
    for sweep in range(total_sweeps):
        for k in range(q):
            delta = a[k]
            for j in range(r):
                g0 = g[j] - M[k, j] * x[k]
                delta += _softplus1(g0 + M[k, j]) - _softplus1(g0)
            p1 = _sigmoid1(delta)
            new = 1.0 if u[t] < p1 else 0.0
            for j in range(r):
                g[j] += M[k, j] * (new - x[k])
            x[k] = new
            t += 1
        if sweep >= burn_sweeps and (sweep - burn_sweeps + 1) % sweeps_per_draw == 0:
            for k in range(q):
                out[kept, k] = np.int64(x[k])
            kept += 1
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if active_backend() == "numba":
    fvbm_logpl = fvbm_logpl_numba
    fvbm_logpl_grad = fvbm_logpl_grad_numba
    rbm_logpl = rbm_logpl_numba
    rbm_logpl_grad = rbm_logpl_grad_numba
    gibbs_chain_fvbm = gibbs_chain_fvbm_numba
    gibbs_chain_rbm = gibbs_chain_rbm_numba
else:
    fvbm_logpl = fvbm_logpl_numpy
    fvbm_logpl_grad = fvbm_logpl_grad_numpy
    rbm_logpl = rbm_logpl_numpy
    rbm_logpl_grad = rbm_logpl_grad_numpy
    gibbs_chain_fvbm = gibbs_chain_fvbm_numpy
    gibbs_chain_rbm = gibbs_chain_rbm_numpy
