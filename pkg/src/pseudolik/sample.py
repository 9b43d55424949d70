"""Reproducible data generation: exact inverse-CDF draws and Gibbs chains.

All randomness flows from a counter-based generator (numpy's Philox, 4x64)
keyed by the pair (master seed, replicate index).  The key mapping is
injective, so replicates get provably disjoint streams, and output is
byte-identical across runs and platforms for a fixed seed pair.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import CapacityError, DomainError
from .models import ModelParams, family_of, params_to_text
from .models.fvbm import FvbmParams
from .models.rbm import RbmParams
from .pmf import TabularPmf
from .support import SupportSpec, state_array

GENERATOR_ID = "numpy-philox4x64/key=(master,replicate)"
EXACT_SAMPLE_STATE_CAP = 1 << 20

GIBBS_DEFAULT_BURN_IN = 1000
GIBBS_DEFAULT_SWEEPS_PER_DRAW = 1


@dataclass(frozen=True)
class SeedSpec:
    """(master seed, replicate index) pair; the two words form the Philox key."""

    master: int
    replicate: int = 0

    def __post_init__(self):
        if not 0 <= self.master < 1 << 64:
            raise ValueError("master seed must fit in 64 unsigned bits")
        if not 0 <= self.replicate < 1 << 64:
            raise ValueError("replicate index must fit in 64 unsigned bits")

    def stream(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.master, self.replicate]))


def sample_exact(f: TabularPmf, n: int, seed: SeedSpec) -> np.ndarray:
    """n independent draws by inverse CDF over the fixed state order."""
    if f.spec.num_states > EXACT_SAMPLE_STATE_CAP:
        raise CapacityError(
            f"exact sampling refused for {f.spec.num_states} states (cap {EXACT_SAMPLE_STATE_CAP})"
        )
    if n < 0:
        raise DomainError("sample size must be non-negative")
    cdf = np.cumsum(f.probs)
    u = seed.stream().random(n)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, f.spec.num_states - 1)
    return state_array(f.spec)[idx]


def sample_gibbs(
    params: ModelParams,
    n: int,
    seed: SeedSpec,
    sweeps_per_draw: int = GIBBS_DEFAULT_SWEEPS_PER_DRAW,
    burn_in: int = GIBBS_DEFAULT_BURN_IN,
) -> np.ndarray:
    """Systematic-scan single-site Gibbs over the model's coordinate conditionals.

    One sweep updates every coordinate once, in order; a state is retained
    every ``sweeps_per_draw`` sweeps after ``burn_in`` warm-up sweeps.  The
    initial state and all update uniforms come from the seed's stream.
    """
    if burn_in < 0:
        raise DomainError("burn_in must be non-negative")
    if sweeps_per_draw < 1:
        raise DomainError("sweeps_per_draw must be at least 1")
    q = params.q
    rng = seed.stream()
    x0 = (rng.random(q) < 0.5).astype(np.float64)
    u = rng.random((burn_in + n * sweeps_per_draw) * q)
    if isinstance(params, FvbmParams):
        return K.gibbs_chain_fvbm(params.M, params.b, x0, n, sweeps_per_draw, burn_in, u)
    if isinstance(params, RbmParams):
        return K.gibbs_chain_rbm(params.M, params.a, params.b, x0, n, sweeps_per_draw, burn_in, u)
    raise DomainError("Gibbs sampling is defined for the coupling families, not the categorical")


# ---------------------------------------------------------------------------
# sample files: CSV with header x1..xq, one state per row, plus a JSON sidecar
# ---------------------------------------------------------------------------


def sample_to_csv(data: np.ndarray, q: int) -> str:
    header = ",".join(f"x{j + 1}" for j in range(q))
    rows = [header]
    for row in np.asarray(data):
        rows.append(",".join(str(int(v)) for v in row))
    return "\n".join(rows) + "\n"


def sample_from_csv(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DomainError("empty sample file")
    q = len(lines[0].split(","))
    out = np.empty((len(lines) - 1, q), dtype=np.int64)
    for i, ln in enumerate(lines[1:]):
        out[i] = [int(tok) for tok in ln.split(",")]
    return out


def params_digest(params: ModelParams) -> str:
    """SHA-256 of the canonical parameter-file text."""
    return hashlib.sha256(params_to_text(params).encode()).hexdigest()


def sample_metadata(params: ModelParams, seed: SeedSpec, sampler: str, n: int) -> dict:
    return {
        "family": family_of(params),
        "params_sha256": params_digest(params),
        "seed": {"master": seed.master, "replicate": seed.replicate},
        "generator": GENERATOR_ID,
        "sampler": sampler,
        "n": n,
    }


def write_sample(path, data: np.ndarray, params: ModelParams, seed: SeedSpec, sampler: str) -> None:
    """Write `path` (CSV) and `path + '.meta.json'` (provenance sidecar)."""
    path = str(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(sample_to_csv(data, params.q))
    meta = sample_metadata(params, seed, sampler, int(np.asarray(data).shape[0]))
    with open(path + ".meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
