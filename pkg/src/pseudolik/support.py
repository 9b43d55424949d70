"""Finite product supports and the index sets of the pseudolikelihood objective.

A support is a product of per-coordinate finite integer value sets.  On top of
it live the two combinatorial families the objective is built from: non-empty
coordinate subsets (for marginal terms) and ordered pairs of disjoint
non-empty subsets (for conditional terms, read as left-given-right).

States map to dense indices in row-major order: the first coordinate is the
most significant digit, so for the binary cube the index is just the binary
number spelled by the state vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CapacityError, DomainError

SUBSET_ENUM_CAP = 20
PARTITION_ENUM_CAP = 12
STATE_ARRAY_CAP = 1 << 22


@dataclass(frozen=True)
class SupportSpec:
    """Product domain: one finite, ordered, duplicate-free value set per coordinate."""

    value_sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.value_sets) < 1:
            raise ValueError("support needs at least one coordinate")
        for j, vals in enumerate(self.value_sets):
            if len(vals) == 0:
                raise ValueError(f"coordinate {j + 1} has an empty value set")
            if len(set(vals)) != len(vals):
                raise ValueError(f"coordinate {j + 1} has duplicate values")
        count = 1
        for vals in self.value_sets:
            count *= len(vals)
            if count >= 1 << 64:
                raise CapacityError("state count does not fit in a 64-bit unsigned integer")

    @classmethod
    def binary(cls, q: int) -> "SupportSpec":
        """The {0,1}^q cube."""
        return cls(tuple(((0, 1),) * q))

    @property
    def q(self) -> int:
        return len(self.value_sets)

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.value_sets)

    @cached_property
    def num_states(self) -> int:
        n = 1
        for s in self.sizes:
            n *= s
        return n

    @cached_property
    def strides(self) -> tuple[int, ...]:
        # row-major: stride of coordinate j is the state count of coordinates after it
        out = [1] * self.q
        for j in range(self.q - 2, -1, -1):
            out[j] = out[j + 1] * self.sizes[j + 1]
        return tuple(out)

    @cached_property
    def _digit_maps(self) -> tuple[dict[int, int], ...]:
        return tuple({v: i for i, v in enumerate(vals)} for vals in self.value_sets)

    def is_binary(self) -> bool:
        return all(v == (0, 1) for v in self.value_sets)


def state_index(spec: SupportSpec, x) -> int:
    """Dense index of a state vector; inverse of :func:`state_at`."""
    x = tuple(x)
    if len(x) != spec.q:
        raise DomainError(f"state has {len(x)} coordinates, support has {spec.q}")
    idx = 0
    for j, (val, stride) in enumerate(zip(x, spec.strides)):
        digit = spec._digit_maps[j].get(int(val))
        if digit is None:
            raise DomainError(f"value {val} not in the value set of coordinate {j + 1}")
        idx += digit * stride
    return idx


def state_at(spec: SupportSpec, index: int) -> tuple[int, ...]:
    """State vector at a dense index."""
    if not 0 <= index < spec.num_states:
        raise DomainError(f"state index {index} outside [0, {spec.num_states})")
    out = []
    for j in range(spec.q):
        digit, index = divmod(index, spec.strides[j])
        out.append(spec.value_sets[j][digit])
    return tuple(out)


def state_array(spec: SupportSpec) -> np.ndarray:
    """All states as an (num_states, q) int64 array, in index order."""
    n = spec.num_states
    if n > STATE_ARRAY_CAP:
        raise CapacityError(f"support has {n} states, above the enumeration cap {STATE_ARRAY_CAP}")
    digits = np.stack(np.unravel_index(np.arange(n), spec.sizes), axis=1)
    out = np.empty((n, spec.q), dtype=np.int64)
    for j, vals in enumerate(spec.value_sets):
        out[:, j] = np.asarray(vals, dtype=np.int64)[digits[:, j]]
    return out


def digits_of(spec: SupportSpec, data: np.ndarray) -> np.ndarray:
    """Per-coordinate digit positions of a batch of states, validating membership.

    Raises DomainError naming the first offending (row, coordinate).
    """
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != spec.q:
        raise DomainError(f"data must be (n, {spec.q}), got {data.shape}")
    digits = np.empty(data.shape, dtype=np.int64)
    for j, vals in enumerate(spec.value_sets):
        v = np.asarray(vals, dtype=np.int64)
        sorter = np.argsort(v, kind="stable")
        pos = np.searchsorted(v, data[:, j], sorter=sorter)
        cand = sorter[np.clip(pos, 0, len(v) - 1)]
        bad = v[cand] != data[:, j]
        if np.any(bad):
            row = int(np.argmax(bad))
            raise DomainError(
                f"row {row}: value {data[row, j]} not in the value set of coordinate {j + 1}"
            )
        digits[:, j] = cand
    return digits


def state_indices(spec: SupportSpec, data: np.ndarray) -> np.ndarray:
    """Dense indices of a batch of states (vectorized state_index)."""
    digits = digits_of(spec, data)
    return digits @ np.asarray(spec.strides, dtype=np.int64)


@dataclass(frozen=True)
class SubsetId:
    """Non-empty coordinate subset, stored as a bitmask over [q] (bit 0 = coordinate 1)."""

    mask: int

    def __post_init__(self):
        if self.mask <= 0:
            raise ValueError("subset must be non-empty")

    @classmethod
    def from_coords(cls, coords) -> "SubsetId":
        """Build from 1-based coordinate numbers."""
        mask = 0
        for c in coords:
            if c < 1:
                raise ValueError("coordinates are 1-based")
            mask |= 1 << (c - 1)
        return cls(mask)

    def coords(self) -> tuple[int, ...]:
        """1-based coordinates, ascending."""
        out, m, c = [], self.mask, 1
        while m:
            if m & 1:
                out.append(c)
            m >>= 1
            c += 1
        return tuple(out)

    def size(self) -> int:
        return bin(self.mask).count("1")

    def text(self) -> str:
        return "{" + ",".join(str(c) for c in self.coords()) + "}"

    @classmethod
    def parse(cls, text: str) -> "SubsetId":
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError(f"subset id must look like '{{1,3}}', got {text!r}")
        body = text[1:-1].strip()
        if not body:
            raise ValueError("subset id must not be empty")
        return cls.from_coords(int(tok) for tok in body.split(","))


@dataclass(frozen=True)
class PartitionId:
    """Ordered pair of disjoint non-empty coordinate subsets: left given right."""

    left: int
    right: int

    def __post_init__(self):
        if self.left <= 0 or self.right <= 0:
            raise ValueError("both blocks must be non-empty")
        if self.left & self.right:
            raise ValueError("blocks must be disjoint")

    @classmethod
    def from_coords(cls, left_coords, right_coords) -> "PartitionId":
        return cls(SubsetId.from_coords(left_coords).mask, SubsetId.from_coords(right_coords).mask)

    @property
    def left_subset(self) -> SubsetId:
        return SubsetId(self.left)

    @property
    def right_subset(self) -> SubsetId:
        return SubsetId(self.right)

    @property
    def union(self) -> SubsetId:
        return SubsetId(self.left | self.right)

    def text(self) -> str:
        return f"{self.left_subset.text()}|{self.right_subset.text()}"

    @classmethod
    def parse(cls, text: str) -> "PartitionId":
        parts = text.strip().split("|")
        if len(parts) != 2:
            raise ValueError(f"partition id must look like '{{1}}|{{2,3}}', got {text!r}")
        return cls(SubsetId.parse(parts[0]).mask, SubsetId.parse(parts[1]).mask)


def full_subset(spec: SupportSpec) -> SubsetId:
    return SubsetId((1 << spec.q) - 1)


def enumerate_subsets(spec: SupportSpec, cap: int = SUBSET_ENUM_CAP) -> list[SubsetId]:
    """All 2^q - 1 non-empty coordinate subsets, ascending by bitmask."""
    if spec.q > cap:
        raise CapacityError(f"subset enumeration refused for q={spec.q} (cap {cap})")
    return [SubsetId(m) for m in range(1, 1 << spec.q)]

def enumerate_partitions(spec: SupportSpec, cap: int = PARTITION_ENUM_CAP) -> list[PartitionId]:
    """Every ordered pair of disjoint non-empty subsets, in (left, right) lexicographic order.

    The count is 3^q - 2^(q+1) + 1: each of the 3^q (left, right, neither)
    assignments minus those with an empty left or empty right block.
    """
    if spec.q > cap:
        raise CapacityError(f"partition enumeration refused for q={spec.q} (cap {cap})")
    out = []
    full = (1 << spec.q) - 1
    for left in range(1, full + 1):
        comp = full & ~left
        if comp == 0:
            continue
        rights = []
        sub = comp
        while sub:
            rights.append(sub)
            sub = (sub - 1) & comp
        for right in reversed(rights):
            out.append(PartitionId(left, right))
    return out


def restrict(spec: SupportSpec, subset: SubsetId) -> SupportSpec:
    """Support over the subset's coordinates, in ascending coordinate order."""
    coords = subset.coords()
    if coords[-1] > spec.q:
        raise DomainError(f"subset {subset.text()} mentions coordinate {coords[-1]} but q={spec.q}")
    return SupportSpec(tuple(spec.value_sets[c - 1] for c in coords))


def restricted_index_map(spec: SupportSpec, subset: SubsetId) -> np.ndarray:
    """For every full-state index, the index of its restriction to the subset.

    Used to aggregate joint tables into marginal tables; accumulation over this
    map visits full states in ascending index order.
    """
    coords = subset.coords()
    if coords[-1] > spec.q:
        raise DomainError(f"subset {subset.text()} mentions coordinate {coords[-1]} but q={spec.q}")
    n = spec.num_states
    if n > STATE_ARRAY_CAP:
        raise CapacityError(f"support has {n} states, above the enumeration cap {STATE_ARRAY_CAP}")
    digits = np.stack(np.unravel_index(np.arange(n), spec.sizes), axis=1)
    sub = restrict(spec, subset)
    cols = [c - 1 for c in coords]
    return digits[:, cols] @ np.asarray(sub.strides, dtype=np.int64)
