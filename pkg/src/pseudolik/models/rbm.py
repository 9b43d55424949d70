"""Restricted Boltzmann machine: binary visibles x in {0,1}^q, binary hiddens y in {0,1}^r.

The (x, y) pair carries weight exp(a'x + b'y + x'My).  Summing the hiddens
gives the visible marginal in closed form,

    f(x) proportional to exp(a'x + sum_j softplus(m_j . x + b_j)),

with m_j the j-th column of M.  Single-site visible conditionals follow from
this marginal; their log odds need only the r hidden activations, never a
2^r enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..errors import CapacityError
from ..pmf import TabularPmf
from ..support import SupportSpec, state_array
from .common import group_binary, logsumexp

EXACT_ENUM_CAP = 20


@dataclass(frozen=True)
class RbmParams:
    M: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        M = np.ascontiguousarray(np.asarray(self.M, dtype=np.float64))
        a = np.ascontiguousarray(np.asarray(self.a, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.b, dtype=np.float64))
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if M.ndim != 2 or M.shape != (a.shape[0], b.shape[0]):
            raise ValueError(f"M must be ({a.shape[0]}, {b.shape[0]}), got {M.shape}")
        if b.shape[0] < 1:
            raise ValueError("hidden dimension must be at least 1")
        if not all(np.all(np.isfinite(v)) for v in (M, a, b)):
            raise ValueError("parameters must be finite")
        M.flags.writeable = False
        a.flags.writeable = False
        b.flags.writeable = False

    @property
    def q(self) -> int:
        return self.a.shape[0]

    @property
    def r(self) -> int:
        return self.b.shape[0]

    def spec(self) -> SupportSpec:
        return SupportSpec.binary(self.q)

    def joint(self) -> TabularPmf:
        return marginal(self)


def pair_log_weight(x, y, p: RbmParams) -> float:
    """Unnormalized log weight a'x + b'y + x'My of a (visible, hidden) pair."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(p.a @ x + p.b @ y + x @ p.M @ y)


def _marginal_log_weights(p: RbmParams) -> np.ndarray:
    if p.q > EXACT_ENUM_CAP:
        raise CapacityError(f"exact enumeration refused for q={p.q} (cap {EXACT_ENUM_CAP})")
    X = state_array(p.spec()).astype(np.float64)
    return X @ p.a + K.softplus(X @ p.M + p.b).sum(axis=1)


def log_partition(p: RbmParams) -> float:
    """Log normalizer of the visible marginal (the hidden sum is already folded in)."""
    return logsumexp(_marginal_log_weights(p))


def marginal(p: RbmParams) -> TabularPmf:
    """Exact visible marginal over {0,1}^q via the softplus form."""
    lw = _marginal_log_weights(p)
    lw -= np.max(lw)
    w = np.exp(lw)
    return TabularPmf(p.spec(), w / w.sum())


def site_logodds(X: np.ndarray, p: RbmParams) -> np.ndarray:
    """Log odds of each coordinate being 1 given the others, per state row."""
    X = np.asarray(X, dtype=np.float64)
    G = X @ p.M + p.b
    out = np.empty(X.shape)
    for k in range(p.q):
        G0 = G - X[:, k, None] * p.M[k]
        out[:, k] = p.a[k] + (K.softplus(G0 + p.M[k]) - K.softplus(G0)).sum(axis=1)
    return out


def conditional(x, k: int, p: RbmParams) -> float:
    """P(X_k = x_k | the other coordinates).

    Log odds of x_k = 1: a_k plus the softplus change of every hidden
    activation when x_k flips from 0 to 1.  Equals the two-term ratio of
    marginal weights with shared visible factors cancelled.
    """
    x = np.asarray(x, dtype=np.float64)
    g0 = x @ p.M + p.b - p.M[k] * x[k]
    delta = float(p.a[k] + (K.softplus(g0 + p.M[k]) - K.softplus(g0)).sum())
    return float(K.sigmoid(np.asarray([delta if x[k] == 1.0 else -delta]))[0])


def logpl(data: np.ndarray, p: RbmParams) -> float:
    """Sum of log single-site visible conditionals over observations and coordinates."""
    X, w = group_binary(data, p.q)
    return float(K.rbm_logpl(X, w, p.M, p.a, p.b))


def logpl_grad(data: np.ndarray, p: RbmParams) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    X, w = group_binary(data, p.q)
    val, gM, ga, gb = K.rbm_logpl_grad(X, w, p.M, p.a, p.b)
    return float(val), gM, ga, gb


# --- packed parameterization: M row-major, visible biases, hidden biases ----


def pack(p: RbmParams) -> np.ndarray:
    return np.concatenate([p.M.ravel(), p.a, p.b])


def unpack(vec: np.ndarray, q: int, r: int) -> RbmParams:
    vec = np.asarray(vec, dtype=np.float64)
    M = vec[: q * r].reshape(q, r)
    return RbmParams(M, vec[q * r : q * r + q], vec[q * r + q :])


def n_params(q: int, r: int) -> int:
    return q * r + q + r


def packed_logpl_grad(X, w, vec: np.ndarray, q: int, r: int) -> tuple[float, np.ndarray]:
    p = unpack(vec, q, r)
    val, gM, ga, gb = K.rbm_logpl_grad(X, w, p.M, p.a, p.b)
    return float(val), np.concatenate([gM.ravel(), ga, gb])


def score_table(p: RbmParams) -> tuple[np.ndarray, np.ndarray]:
    """(probs, per-state score of the log visible marginal w.r.t. packed coordinates)."""
    table = marginal(p)
    X = state_array(p.spec()).astype(np.float64)
    S = K.sigmoid(X @ p.M + p.b)  # (N, r) hidden unit means per visible state
    stats = np.concatenate([(X[:, :, None] * S[:, None, :]).reshape(X.shape[0], -1), X, S], axis=1)
    mean = table.probs @ stats
    return table.probs, stats - mean
