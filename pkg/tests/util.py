"""Shared test helpers: random parameter draws and the finite-difference oracle."""

import numpy as np

import pseudolik as pk


def rand_fvbm(rng, q, scale=0.5):
    upper = np.triu(rng.uniform(-scale, scale, size=(q, q)), k=1)
    return pk.FvbmParams(upper + upper.T, rng.uniform(-scale, scale, size=q))


def rand_rbm(rng, q, r, scale=0.5):
    return pk.RbmParams(
        rng.uniform(-scale, scale, size=(q, r)),
        rng.uniform(-scale, scale, size=q),
        rng.uniform(-scale, scale, size=r),
    )


def rand_pi(rng, q):
    raw = rng.uniform(0.2, 1.0, size=q)
    return pk.CategoricalParams(raw / raw.sum())


def rand_pmf(rng, spec):
    raw = rng.uniform(0.05, 1.0, size=spec.num_states)
    return pk.TabularPmf(spec, raw / raw.sum())


def central_diff(f, x, h=1e-5):
    """Central finite differences of a scalar function, one coordinate at a time."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-30)
    return float(np.max(np.abs(a - b))) / scale
