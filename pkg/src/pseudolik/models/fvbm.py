"""Fully-visible Boltzmann machine on {0,1}^q.

Joint probability proportional to exp(x'Mx/2 + b'x) with M symmetric and
zero-diagonal.  The single-site conditional of coordinate k is a logistic
function of the activation m_k . x + b_k, which is independent of x_k itself
because the diagonal vanishes.  The native log-PL objective sums the log
conditionals of every coordinate over the sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..errors import CapacityError
from ..pmf import TabularPmf
from ..support import SupportSpec, state_array
from .common import group_binary, logsumexp, validate_binary

EXACT_ENUM_CAP = 20


@dataclass(frozen=True)
class FvbmParams:
    M: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        M = np.ascontiguousarray(np.asarray(self.M, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.b, dtype=np.float64))
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)
        q = b.shape[0]
        if M.shape != (q, q):
            raise ValueError(f"M must be ({q}, {q}), got {M.shape}")
        if not np.array_equal(M, M.T):
            raise ValueError("M must be exactly symmetric")
        if np.any(np.diag(M) != 0.0):
            raise ValueError("diag(M) must be exactly zero")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
            raise ValueError("parameters must be finite")
        M.flags.writeable = False
        b.flags.writeable = False

    @property
    def q(self) -> int:
        return self.b.shape[0]

    def spec(self) -> SupportSpec:
        return SupportSpec.binary(self.q)

    def joint(self) -> TabularPmf:
        return joint(self)


def log_weight(x, p: FvbmParams) -> float:
    """Unnormalized log probability x'Mx/2 + b'x."""
    x = np.asarray(x, dtype=np.float64)
    return float(0.5 * x @ p.M @ x + p.b @ x)


def _log_weights_all(p: FvbmParams) -> np.ndarray:
    if p.q > EXACT_ENUM_CAP:
        raise CapacityError(f"exact enumeration refused for q={p.q} (cap {EXACT_ENUM_CAP})")
    X = state_array(p.spec()).astype(np.float64)
    return 0.5 * np.einsum("ij,jk,ik->i", X, p.M, X) + X @ p.b


def log_partition(p: FvbmParams) -> float:
    """Log of the normalization sum over all 2^q states (max-shifted)."""
    return logsumexp(_log_weights_all(p))


def joint(p: FvbmParams) -> TabularPmf:
    lw = _log_weights_all(p)
    lw -= np.max(lw)
    w = np.exp(lw)
    return TabularPmf(p.spec(), w / w.sum())


def conditional(x, k: int, p: FvbmParams) -> float:
    """P(X_k = x_k | the other coordinates), via the stable logistic branch."""
    x = np.asarray(x, dtype=np.float64)
    t = float(p.M[k] @ x + p.b[k])
    return float(K.sigmoid(np.asarray([t if x[k] == 1.0 else -t]))[0])


def logpl(data: np.ndarray, p: FvbmParams) -> float:
    """Sum of log single-site conditionals over all observations and coordinates."""
    X, w = group_binary(data, p.q)
    return float(K.fvbm_logpl(X, w, p.M, p.b))


def logpl_grad(data: np.ndarray, p: FvbmParams) -> tuple[float, np.ndarray, np.ndarray]:
    """Objective plus gradients (full symmetric coupling-pair matrix, biases).

    The coupling gradient entry (k, l) is the derivative with respect to the
    single free parameter shared by M[k, l] and M[l, k].
    """
    X, w = group_binary(data, p.q)
    val, D, gb = K.fvbm_logpl_grad(X, w, p.M, p.b)
    return float(val), D, gb


# --- packed parameterization: strict upper triangle row-major, then biases --


def triu_indices(q: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(q, k=1)

def pack(p: FvbmParams) -> np.ndarray:
    iu, ju = triu_indices(p.q)
    return np.concatenate([p.M[iu, ju], p.b])


def unpack(vec: np.ndarray, q: int) -> FvbmParams:
    vec = np.asarray(vec, dtype=np.float64)
    n_pairs = q * (q - 1) // 2
    M = np.zeros((q, q))
    iu, ju = triu_indices(q)
    M[iu, ju] = vec[:n_pairs]
    M[ju, iu] = vec[:n_pairs]
    return FvbmParams(M, vec[n_pairs:])


def n_params(q: int) -> int:
    return q * (q - 1) // 2 + q


def packed_logpl_grad(X, w, vec: np.ndarray, q: int) -> tuple[float, np.ndarray]:
    p = unpack(vec, q)
    val, D, gb = K.fvbm_logpl_grad(X, w, p.M, p.b)
    iu, ju = triu_indices(q)
    return float(val), np.concatenate([D[iu, ju], gb])


def score_table(p: FvbmParams) -> tuple[np.ndarray, np.ndarray]:
    """(probs, per-state score of the log joint w.r.t. packed coordinates).

    Exponential-family form: score(x) = stats(x) - E[stats], with stats the
    coupling products x_k x_l (k < l) followed by the coordinates themselves.
    """
    table = joint(p)
    X = state_array(p.spec()).astype(np.float64)
    iu, ju = triu_indices(p.q)
    stats = np.concatenate([X[:, iu] * X[:, ju], X], axis=1)
    mean = table.probs @ stats
    return table.probs, stats - mean
