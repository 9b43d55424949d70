"""Helpers shared by the model families."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError


def validate_binary(data: np.ndarray, q: int) -> np.ndarray:
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != q:
        raise DomainError(f"data must be (n, {q}), got {data.shape}")
    bad = (data != 0) & (data != 1)
    if np.any(bad):
        row = int(np.argmax(np.any(bad, axis=1)))
        raise DomainError(f"row {row}: entries must be 0 or 1")
    return data


def group_binary(data: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapse a binary sample to (unique states as float64, observation counts).

    The log-PL objective is a weighted sum over states, so fitting cost depends
    on the number of distinct states (at most 2^q), not the sample size.
    """
    data = validate_binary(data, q)
    idx = data.astype(np.int64) @ (1 << np.arange(q - 1, -1, -1, dtype=np.int64))
    counts = np.bincount(idx, minlength=1 << q)
    occupied = np.nonzero(counts)[0]
    states = ((occupied[:, None] >> np.arange(q - 1, -1, -1)) & 1).astype(np.float64)
    return states, counts[occupied].astype(np.float64)


def logsumexp(v: np.ndarray) -> float:
    m = float(np.max(v))
    return m + float(np.log(np.sum(np.exp(v - m))))
