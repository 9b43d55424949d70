"""The weighted pseudolikelihood objective and its pseudo-entropy.

An objective is described by a sparse ``WeightScheme``: non-negative
coefficients on coordinate subsets (marginal log-probability terms) and on
ordered left-given-right partitions (conditional log-probability terms).
Absent keys mean zero.  Evaluation totals, per-term breakdowns, and the
entropy-style functional over the same terms all live here, together with the
named special-case schemes: plain likelihood, composite marginal, pairwise,
full single-site conditionals, and the one-hot categorical construction.

A datum that hits a zero-probability marginal or conditional makes its term
-inf; -inf totals order below every finite value, so optimizers treat such
configurations as strictly dominated rather than erroring out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .pmf import TabularPmf, condition, marginalize
from .support import PartitionId, SubsetId, restrict, state_indices


@dataclass(frozen=True)
class WeightScheme:
    """Sparse non-negative weights: c over subsets, d over ordered partitions."""

    c: dict
    d: dict
    name: str = "custom"

    def __post_init__(self):
        for key, coef in self.c.items():
            if not isinstance(key, SubsetId):
                raise TypeError("c keys must be SubsetId")
            if coef < 0:
                raise ValueError(f"negative weight on {key.text()}")
        for key, coef in self.d.items():
            if not isinstance(key, PartitionId):
                raise TypeError("d keys must be PartitionId")
            if coef < 0:
                raise ValueError(f"negative weight on {key.text()}")
        if not any(v > 0 for v in self.c.values()) and not any(v > 0 for v in self.d.values()):
            raise ValueError("a weight scheme needs at least one strictly positive coefficient")

    def scaled(self, lam: float) -> "WeightScheme":
        if lam <= 0:
            raise ValueError("scale factor must be positive")
        return WeightScheme(
            {k: lam * v for k, v in self.c.items()},
            {k: lam * v for k, v in self.d.items()},
            name=self.name,
        )

    def active_subsets(self) -> list[SubsetId]:
        return [k for k, v in sorted(self.c.items(), key=lambda kv: kv[0].mask) if v > 0]

    def active_partitions(self) -> list[PartitionId]:
        return [
            k
            for k, v in sorted(self.d.items(), key=lambda kv: (kv[0].left, kv[0].right))
            if v > 0
        ]


def scheme_ml(q: int) -> WeightScheme:
    """Weight 1 on the full coordinate set: the plain log-likelihood."""
    return WeightScheme({SubsetId((1 << q) - 1): 1.0}, {}, name="ml")


def scheme_composite_marginal(q: int) -> WeightScheme:
    """Weight 1 on every singleton subset."""
    return WeightScheme({SubsetId(1 << k): 1.0 for k in range(q)}, {}, name="composite_marginal")


def scheme_pairwise(q: int) -> WeightScheme:
    """Weight 1 on every two-coordinate subset."""
    if q < 2:
        raise DomainError("pairwise scheme needs at least two coordinates")
    c = {}
    for k in range(q):
        for l in range(k + 1, q):
            c[SubsetId((1 << k) | (1 << l))] = 1.0
    return WeightScheme(c, {}, name="pairwise")


def scheme_full_conditionals(q: int) -> WeightScheme:
    """Weight 1 on each single-site conditional: coordinate k given all the others."""
    if q < 2:
        raise DomainError("single-site conditionals need at least two coordinates")
    full = (1 << q) - 1
    d = {PartitionId(1 << k, full & ~(1 << k)): 1.0 for k in range(q)}
    return WeightScheme({}, d, name="full_conditionals")


def scheme_categorical(q: int) -> WeightScheme:
    """Full-table likelihood plus the conditional of the leading block given the last coordinate.

    This is the scheme whose generic evaluation reproduces the one-hot
    categorical family's native objective.
    """
    if q < 2:
        raise DomainError("the categorical scheme needs at least two coordinates")
    full = (1 << q) - 1
    last = 1 << (q - 1)
    return WeightScheme(
        {SubsetId(full): 1.0}, {PartitionId(full & ~last, last): 1.0}, name="categorical"
    )


SCHEME_BUILDERS = {
    "ml": scheme_ml,
    "composite_marginal": scheme_composite_marginal,
    "pairwise": scheme_pairwise,
    "full_conditionals": scheme_full_conditionals,
    "categorical": scheme_categorical,
}


def scheme_by_name(name: str, q: int) -> WeightScheme:
    if name not in SCHEME_BUILDERS:
        raise ParseError(f"unknown scheme {name!r}; expected one of {sorted(SCHEME_BUILDERS)}")
    return SCHEME_BUILDERS[name](q)


@dataclass(frozen=True)
class PlValue:
    """Objective total with its per-term breakdown.

    ``offenders`` lists (term text, data row) pairs whose probability was zero
    or whose conditioning event was undefined; any offender makes the total -inf.
    """

    total: float
    marginal_terms: dict
    conditional_terms: dict
    offenders: tuple = ()


def _as_table(f) -> TabularPmf:
    if isinstance(f, TabularPmf):
        return f
    joint = getattr(f, "joint", None)
    if joint is None:
        raise TypeError(f"expected a TabularPmf or a model with .joint(), got {type(f).__name__}")
    return joint()


def log_pl(f, data: np.ndarray, w: WeightScheme) -> PlValue:
    """Evaluate the weighted objective of a sample under a joint table or model."""
    table = _as_table(f)
    spec = table.spec
    data = np.asarray(data)

    ridx_cache: dict[int, np.ndarray] = {}

    def restricted(sub: SubsetId) -> np.ndarray:
        if sub.mask not in ridx_cache:
            cols = [c - 1 for c in sub.coords()]
            ridx_cache[sub.mask] = state_indices(restrict(spec, sub), data[:, cols])
        return ridx_cache[sub.mask]

    marginal_terms: dict[SubsetId, float] = {}
    conditional_terms: dict[PartitionId, float] = {}
    offenders: list[tuple[str, int]] = []

    for sub in w.active_subsets():
        coef = w.c[sub]
        probs = marginalize(table, sub).probs[restricted(sub)]
        zero = probs <= 0.0
        if np.any(zero):
            offenders.append((sub.text(), int(np.argmax(zero))))
            marginal_terms[sub] = float("-inf")
        else:
            marginal_terms[sub] = float(coef * np.sum(np.log(probs)))

    for part in w.active_partitions():
        coef = w.d[part]
        cond = condition(table, part)
        rows = restricted(part.right_subset)
        cols = restricted(part.left_subset)
        undefined = ~cond.defined[rows]
        vals = np.where(undefined, 0.0, cond.probs[rows, cols])
        bad = undefined | (vals <= 0.0)
        if np.any(bad):
            offenders.append((part.text(), int(np.argmax(bad))))
            conditional_terms[part] = float("-inf")
        else:
            conditional_terms[part] = float(coef * np.sum(np.log(vals)))

    total = math.fsum(marginal_terms.values()) + math.fsum(conditional_terms.values())
    if offenders:
        total = float("-inf")
    return PlValue(total, marginal_terms, conditional_terms, tuple(offenders))


def _neg_ylogy(y: np.ndarray) -> np.ndarray:
    """-y log y with the 0 log 0 = 0 convention, elementwise."""
    out = np.zeros_like(y)
    pos = y > 0.0
    out[pos] = -y[pos] * np.log(y[pos])
    return out


def pseudo_entropy(f, w: WeightScheme, right_marginal_weighted: bool = False) -> float:
    """The entropy-style functional over the scheme's weighted terms.

    The default sums conditional-row entropies over right states without any
    weighting, as the functional is displayed; ``right_marginal_weighted=True``
    weights each row by the probability of its conditioning event instead (the
    variant matched to sample proportions).  Undefined rows contribute zero
    either way.
    """
    table = _as_table(f)
    total = 0.0
    for sub in w.active_subsets():
        total += w.c[sub] * float(np.sum(_neg_ylogy(marginalize(table, sub).probs)))
    for part in w.active_partitions():
        cond = condition(table, part)
        rows = _neg_ylogy(np.where(cond.defined[:, None], np.nan_to_num(cond.probs), 0.0))
        if right_marginal_weighted:
            rmarg = marginalize(table, part.right_subset).probs
            total += w.d[part] * float(np.sum(rmarg[:, None] * rows))
        else:
            total += w.d[part] * float(np.sum(rows))
    return total


@dataclass(frozen=True)
class EntropyBoundReport:
    """Certificate that the entropy functional is finite on a bounded support.

    Every summand -y log y over y in [0, 1] is at most 1/e, so the functional
    is bounded by (sum of weights times their table sizes) / e.
    """

    value: float
    summand_count: int
    weighted_summand_count: float
    max_summand: float
    bound: float
    all_within: bool
    finite: bool


def entropy_term_bound_check(f, w: WeightScheme) -> EntropyBoundReport:
    table = _as_table(f)
    max_summand = 0.0
    count = 0
    weighted = 0.0
    for sub in w.active_subsets():
        terms = _neg_ylogy(marginalize(table, sub).probs)
        max_summand = max(max_summand, float(terms.max()))
        count += terms.size
        weighted += w.c[sub] * terms.size
    for part in w.active_partitions():
        cond = condition(table, part)
        rows = _neg_ylogy(np.where(cond.defined[:, None], np.nan_to_num(cond.probs), 0.0))
        if rows.size:
            max_summand = max(max_summand, float(rows.max()))
        n_defined = int(cond.defined.sum()) * cond.probs.shape[1]
        count += n_defined
        weighted += w.d[part] * n_defined
    value = pseudo_entropy(table, w)
    bound = weighted / math.e
    return EntropyBoundReport(
        value=value,
        summand_count=count,
        weighted_summand_count=weighted,
        max_summand=max_summand,
        bound=bound,
        all_within=max_summand <= 1.0 / math.e + 1e-15,
        finite=math.isfinite(value),
    )


# ---------------------------------------------------------------------------
# text form: `c {1,3} 1.0` and `d {1}|{2,3} 0.5`, one coefficient per line
# ---------------------------------------------------------------------------


def scheme_to_text(w: WeightScheme) -> str:
    lines = []
    for sub in sorted(w.c, key=lambda s: s.mask):
        lines.append(f"c {sub.text()} {format(w.c[sub], '.17g')}")
    for part in sorted(w.d, key=lambda p: (p.left, p.right)):
        lines.append(f"d {part.text()} {format(w.d[part], '.17g')}")
    return "\n".join(lines) + "\n"


def scheme_from_text(text: str) -> WeightScheme:
    c: dict[SubsetId, float] = {}
    d: dict[PartitionId, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) != 3 or toks[0] not in ("c", "d"):
            raise ParseError("expected 'c <subset> <weight>' or 'd <partition> <weight>'", line=lineno)
        try:
            coef = float(toks[2])
        except ValueError:
            raise ParseError(f"bad weight {toks[2]!r}", line=lineno) from None
        try:
            if toks[0] == "c":
                key = SubsetId.parse(toks[1])
                if key in c:
                    raise ParseError(f"duplicate subset {toks[1]}", line=lineno)
                c[key] = coef
            else:
                pkey = PartitionId.parse(toks[1])
                if pkey in d:
                    raise ParseError(f"duplicate partition {toks[1]}", line=lineno)
                d[pkey] = coef
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    try:
        return WeightScheme(c, d)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def scheme_from_file(path) -> WeightScheme:
    with open(path, encoding="utf-8") as fh:
        return scheme_from_text(fh.read())
