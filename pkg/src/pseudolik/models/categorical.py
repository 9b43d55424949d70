"""One-hot categorical family on {0,1}^q.

A state is one of the q unit vectors e_k; mass pi_k sits on e_k and the rest
of the cube carries zero probability.  The family's native objective adds to
the full log-likelihood the log conditional of the leading q-1 coordinates
given the last coordinate being zero, which contributes

    sum_i sum_{k<q} I(x_i = e_k) [log pi_k - log(pi_1 + ... + pi_{q-1})].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..pmf import TabularPmf
from ..support import SupportSpec

PI_SUM_ATOL = 1e-12


@dataclass(frozen=True)
class CategoricalParams:
    pi: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.pi, dtype=np.float64))
        object.__setattr__(self, "pi", p)
        if p.ndim != 1 or p.shape[0] < 1:
            raise ValueError("pi must be a non-empty vector")
        if np.any(p <= 0.0):
            raise ValueError("every category probability must be strictly positive")
        if abs(float(np.sum(p)) - 1.0) > PI_SUM_ATOL:
            raise ValueError("category probabilities must sum to 1")
        p.flags.writeable = False

    @property
    def q(self) -> int:
        return self.pi.shape[0]

    def spec(self) -> SupportSpec:
        return SupportSpec.binary(self.q)

    def joint(self) -> TabularPmf:
        return joint(self)


def _onehot_indices(q: int) -> np.ndarray:
    # state index of e_k under row-major binary encoding: bit q-k from the left
    return np.asarray([1 << (q - 1 - k) for k in range(q)], dtype=np.int64)


def joint(p: CategoricalParams) -> TabularPmf:
    """Probability table on the cube: mass pi_k at e_k, zero elsewhere."""
    probs = np.zeros(1 << p.q)
    probs[_onehot_indices(p.q)] = p.pi
    return TabularPmf(p.spec(), probs)


def conditional_given_last_zero(p: CategoricalParams) -> np.ndarray:
    """Distribution of the leading one-hot block when the last coordinate is 0.

    Entry k (k in 1..q-1) is pi_k / (pi_1 + ... + pi_{q-1}).  Given the last
    coordinate is 1 the leading block is identically zero, so that branch
    carries no free distribution.
    """
    if p.q < 2:
        raise DomainError("conditional needs at least two coordinates")
    head = p.pi[:-1]
    return head / float(np.sum(head))


def onehot_labels(data: np.ndarray, q: int) -> np.ndarray:
    """Category index (0-based) of each one-hot row; rejects non-one-hot rows."""
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != q:
        raise DomainError(f"data must be (n, {q}), got {data.shape}")
    ok = np.all((data == 0) | (data == 1), axis=1) & (data.sum(axis=1) == 1)
    if not np.all(ok):
        row = int(np.argmin(ok))
        raise DomainError(f"row {row}: state is not one-hot")
    return np.argmax(data, axis=1)


def label_counts(data: np.ndarray, q: int) -> np.ndarray:
    return np.bincount(onehot_labels(data, q), minlength=q)


def logpl(data: np.ndarray, p: CategoricalParams) -> float:
    """Native objective: log-likelihood plus the leading-block conditional term."""
    n_k = label_counts(data, p.q)
    log_pi = np.log(p.pi)
    head = float(np.sum(p.pi[:-1]))
    val = float(n_k @ log_pi)
    val += float(n_k[:-1] @ (log_pi[:-1] - np.log(head)))
    return val


def pseudoentropy(p: CategoricalParams) -> float:
    """Entropy of the category distribution plus entropy of the leading-block conditional."""
    head = p.pi[:-1]
    s = float(np.sum(head))
    ratios = head / s
    return float(-(p.pi @ np.log(p.pi)) - (ratios @ np.log(ratios)))


# --- packed parameterization for unconstrained optimization -----------------
# z_k = log(pi_k / pi_q) for k < q; pi = softmax((z, 0)).


def pack(p: CategoricalParams) -> np.ndarray:
    return np.log(p.pi[:-1] / p.pi[-1])


def unpack(z: np.ndarray, q: int) -> CategoricalParams:
    y = np.concatenate([np.asarray(z, dtype=np.float64), [0.0]])
    y -= np.max(y)
    e = np.exp(y)
    return CategoricalParams(e / e.sum())


def n_params(q: int) -> int:
    return q - 1


def packed_logpl_grad(counts: np.ndarray, z: np.ndarray) -> tuple[float, np.ndarray]:
    """Native objective and its gradient in the packed coordinates.

    counts[k] is the number of observations equal to e_{k+1}.
    """
    q = counts.shape[0]
    p = unpack(z, q)
    pi = p.pi
    n_total = float(np.sum(counts))
    n_head = float(np.sum(counts[:-1]))
    s = float(np.sum(pi[:-1]))
    val = float(counts @ np.log(pi)) + float(counts[:-1] @ (np.log(pi[:-1]) - np.log(s)))
    # dL/dpi_k = 2 n_k/pi_k - n_head/s (k<q) and n_q/pi_q (k=q); pushing through
    # the softmax jacobian pi_k(delta_kj - pi_j) collapses to the form below,
    # using sum_k (dL/dpi_k) pi_k = n_total.
    grad = 2.0 * counts[:-1] - pi[:-1] * (n_head / s) - pi[:-1] * n_total
    return val, grad


def score_table(p: CategoricalParams) -> tuple[np.ndarray, np.ndarray]:
    """(probs, per-state score of log-probability w.r.t. packed coordinates).

    Zero-probability states get zero scores; they never contribute because
    every aggregation multiplies scores by the state probability.
    """
    q = p.q
    probs = np.zeros(1 << q)
    idx = _onehot_indices(q)
    probs[idx] = p.pi
    scores = np.zeros((1 << q, q - 1))
    eye = np.eye(q, q - 1)
    scores[idx] = eye - p.pi[None, :-1]
    return probs, scores
