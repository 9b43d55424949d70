"""Exact tabular PMFs: marginalization, conditioning, empirical counts.

Tables are immutable after construction and all operations are pure, so they
can be shared freely across workers.  Conditional rows whose conditioning
event has zero probability are flagged undefined (NaN entries) rather than
filled in; downstream evaluation treats hitting such a row as a -inf term.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StructureError
from .support import (
    PartitionId,
    SubsetId,
    SupportSpec,
    restrict,
    restricted_index_map,
    state_array,
    state_indices,
)

NORMALIZATION_ATOL = 1e-12


@dataclass(frozen=True)
class TabularPmf:
    """Dense probability table over an enumerated support, indexed by state."""

    spec: SupportSpec
    probs: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        object.__setattr__(self, "probs", p)
        if p.shape != (self.spec.num_states,):
            raise StructureError(f"expected {self.spec.num_states} probabilities, got {p.shape}")
        if np.any(p < 0.0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        total = float(np.sum(p))
        if abs(total - 1.0) > NORMALIZATION_ATOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1 within {NORMALIZATION_ATOL}")
        p.flags.writeable = False

    @classmethod
    def uniform(cls, spec: SupportSpec) -> "TabularPmf":
        n = spec.num_states
        return cls(spec, np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, spec: SupportSpec, state) -> "TabularPmf":
        from .support import state_index

        p = np.zeros(spec.num_states)
        p[state_index(spec, state)] = 1.0
        return cls(spec, p)


@dataclass(frozen=True)
class MarginalTable:
    """Distribution of the coordinates in one subset."""

    subset: SubsetId
    spec: SupportSpec
    probs: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        object.__setattr__(self, "probs", p)
        if p.shape != (self.spec.num_states,):
            raise StructureError(f"expected {self.spec.num_states} probabilities, got {p.shape}")
        if np.any(p < 0.0):
            raise ValueError("probabilities must be non-negative")
        if abs(float(np.sum(p)) - 1.0) > NORMALIZATION_ATOL:
            raise ValueError("marginal does not sum to 1")
        p.flags.writeable = False


@dataclass(frozen=True)
class ConditionalTable:
    """Per right-state distributions over left-states for one ordered partition.

    ``probs[j]`` is the distribution of the left block given the j-th right
    state; ``defined[j]`` is False when that right state has zero probability,
    in which case the row is NaN.
    """

    partition: PartitionId
    left_spec: SupportSpec
    right_spec: SupportSpec
    probs: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        d = np.ascontiguousarray(np.asarray(self.defined, dtype=bool))
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "defined", d)
        nr, nl = self.right_spec.num_states, self.left_spec.num_states
        if p.shape != (nr, nl) or d.shape != (nr,):
            raise StructureError(f"expected ({nr}, {nl}) table, got {p.shape}")
        for j in range(nr):
            if d[j]:
                if abs(float(np.sum(p[j])) - 1.0) > NORMALIZATION_ATOL:
                    raise ValueError(f"conditional row {j} does not sum to 1")
        p.flags.writeable = False
        d.flags.writeable = False


@dataclass(frozen=True)
class EmpiricalTable:
    """Observed event counts for one subset or partition; proportions are counts / m."""

    ident: SubsetId | PartitionId
    counts: np.ndarray
    m: int

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.counts, dtype=np.int64))
        object.__setattr__(self, "counts", c)
        if int(c.sum()) != self.m:
            raise StructureError("counts must sum to the sample size")
        c.flags.writeable = False

    @property
    def proportions(self) -> np.ndarray:
        return self.counts / self.m


def marginalize(f: TabularPmf, s: SubsetId) -> MarginalTable:
    """Sum the joint over every state agreeing with each restricted state.

    Accumulation follows ascending full-state index order (np.bincount), so
    results are bit-identical across runs.
    """
    gidx = restricted_index_map(f.spec, s)
    sub = restrict(f.spec, s)
    probs = np.bincount(gidx, weights=f.probs, minlength=sub.num_states)
    return MarginalTable(s, sub, probs)


def joint_event_table(f: TabularPmf, t: PartitionId) -> np.ndarray:
    """(n_right, n_left) table of joint probabilities of (right-state, left-state)."""
    left_idx = restricted_index_map(f.spec, t.left_subset)
    right_idx = restricted_index_map(f.spec, t.right_subset)
    nl = restrict(f.spec, t.left_subset).num_states
    nr = restrict(f.spec, t.right_subset).num_states
    joint = np.zeros((nr, nl))
    np.add.at(joint, (right_idx, left_idx), f.probs)
    return joint


def condition(f: TabularPmf, t: PartitionId) -> ConditionalTable:
    """Left-given-right conditional rows; zero-probability right states stay undefined."""
    joint = joint_event_table(f, t)
    row_mass = joint.sum(axis=1)
    defined = row_mass > 0.0
    probs = np.full_like(joint, np.nan)
    probs[defined] = joint[defined] / row_mass[defined, None]
    return ConditionalTable(
        t, restrict(f.spec, t.left_subset), restrict(f.spec, t.right_subset), probs, defined
    )


def empirical_tables(
    spec: SupportSpec, data: np.ndarray, ids
) -> dict[SubsetId | PartitionId, EmpiricalTable]:
    """Exact event counts of a sample for each requested subset or partition."""
    data = np.asarray(data)
    from .support import digits_of

    digits_of(spec, data)  # reject out-of-support rows up front, naming the row
    idx_cache: dict[int, np.ndarray] = {}

    def rstates(subset: SubsetId) -> np.ndarray:
        if subset.mask not in idx_cache:
            cols = [c - 1 for c in subset.coords()]
            idx_cache[subset.mask] = state_indices(restrict(spec, subset), data[:, cols])
        return idx_cache[subset.mask]

    out: dict[SubsetId | PartitionId, EmpiricalTable] = {}
    m = data.shape[0] if data.ndim == 2 else 0
    for ident in ids:
        if isinstance(ident, SubsetId):
            sub = restrict(spec, ident)
            counts = np.bincount(rstates(ident), minlength=sub.num_states)
            out[ident] = EmpiricalTable(ident, counts, m)
        elif isinstance(ident, PartitionId):
            nl = restrict(spec, ident.left_subset).num_states
            nr = restrict(spec, ident.right_subset).num_states
            counts = np.zeros((nr, nl), dtype=np.int64)
            np.add.at(counts, (rstates(ident.right_subset), rstates(ident.left_subset)), 1)
            out[ident] = EmpiricalTable(ident, counts, m)
        else:
            raise StructureError(f"unsupported id type {type(ident).__name__}")
    return out


@dataclass(frozen=True)
class CompatReport:
    """Result of re-deriving claimed marginal/conditional tables from a joint."""

    deviations: dict
    max_deviation: float
    passed: bool
    tol: float


def compatibility_check(f: TabularPmf, claimed, tol: float) -> CompatReport:
    """Recompute each claimed table from ``f`` and report the worst absolute deviation.

    Conditional rows are compared only where both sides define them; a
    definedness mismatch counts as a deviation of 1.
    """
    deviations = {}
    for table in claimed:
        if isinstance(table, MarginalTable):
            try:
                ref = marginalize(f, table.subset)
            except DomainError as exc:
                raise StructureError(str(exc)) from None
            if ref.spec != table.spec:
                raise StructureError(f"marginal {table.subset.text()} has mismatched support")
            dev = float(np.max(np.abs(ref.probs - table.probs)))
            deviations[table.subset] = dev
        elif isinstance(table, ConditionalTable):
            try:
                ref = condition(f, table.partition)
            except DomainError as exc:
                raise StructureError(str(exc)) from None
            if ref.left_spec != table.left_spec or ref.right_spec != table.right_spec:
                raise StructureError(f"conditional {table.partition.text()} has mismatched support")
            if np.any(ref.defined != table.defined):
                dev = 1.0
            else:
                both = ref.defined
                dev = 0.0
                if np.any(both):
                    dev = float(np.max(np.abs(ref.probs[both] - table.probs[both])))
            deviations[table.partition] = dev
        else:
            raise StructureError(f"unsupported table type {type(table).__name__}")
    max_dev = max(deviations.values(), default=0.0)
    return CompatReport(deviations, max_dev, max_dev <= tol, tol)


# ---------------------------------------------------------------------------
# CSV form: one row per state in index order, header x1..xq,probability
# ---------------------------------------------------------------------------


def pmf_to_csv(f: TabularPmf) -> str:
    header = ",".join(f"x{j + 1}" for j in range(f.spec.q)) + ",probability"
    lines = [header]
    states = state_array(f.spec)
    for i in range(f.spec.num_states):
        coords = ",".join(str(int(v)) for v in states[i])
        lines.append(f"{coords},{format(f.probs[i], '.17g')}")
    return "\n".join(lines) + "\n"


def pmf_from_csv(text: str, spec: SupportSpec) -> TabularPmf:
    reader = io.StringIO(text)
    header = reader.readline().strip().split(",")
    expected = [f"x{j + 1}" for j in range(spec.q)] + ["probability"]
    if header != expected:
        raise StructureError(f"unexpected header {header}")
    probs = np.zeros(spec.num_states)
    seen = np.zeros(spec.num_states, dtype=bool)
    for line in reader:
        if not line.strip():
            continue
        toks = line.strip().split(",")
        state = [int(v) for v in toks[: spec.q]]
        idx = state_indices(spec, np.asarray([state]))[0]
        if seen[idx]:
            raise StructureError(f"duplicate state row for {tuple(state)}")
        seen[idx] = True
        probs[idx] = float(toks[spec.q])
    if not np.all(seen):
        missing = int(np.argmin(seen))
        raise StructureError(f"missing state row at index {missing}")
    return TabularPmf(spec, probs)
