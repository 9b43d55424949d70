"""Monte Carlo consistency experiments: sample at known truth, fit, measure errors.

An experiment fixes a generative model, a weight scheme, a grid of sample
sizes, and a replicate count.  Every (n, replicate) cell samples its own
stream, fits by MPL, and records one row per weighted term: the sup-norm
distance between the fitted and generative marginal or conditional tables
(conditional rows whose conditioning event has probability zero under the
truth are excluded).  Rows are sorted before writing, so thread counts never
change bytes on disk, and the whole run is a pure function of the config.

Config file grammar (shared with the CLI; `#` starts a comment):

    family fvbm                # categorical | fvbm | rbm
    q 4
    M  <q*q row-major floats>  # family-specific parameter lines, see models
    b  <q floats>
    scheme full_conditionals   # named scheme, or file:<path> for a scheme file
    grid 100 1000 10000        # strictly increasing sample sizes
    replicates 20
    seed 20260810              # master seed (u64)
    sampler exact              # exact | gibbs
    n 1000                     # only read by the `sample` subcommand
    out results                # optional default output directory
    gibbs_burn_in 1000         # optional, gibbs only
    gibbs_sweeps 1             # optional, gibbs only
    fit_restarts 5             # optional FitConfig overrides
    fit_max_iter 500
    fit_grad_tol 1e-8
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._kernels import active_backend
from .errors import DomainError, ParseError
from .estimate import FitConfig, FitReport, _native_scheme_name, fit_mpl
from .models import ModelParams, family_of, params_from_kv, params_to_text
from .pl import WeightScheme, entropy_term_bound_check, scheme_by_name, scheme_from_file
from .pmf import condition, marginalize
from .sample import GENERATOR_ID, SeedSpec, sample_exact, sample_gibbs
from .textio import parse_kv_lines, take_int, take_str

RECORD_COLUMNS = (
    "family",
    "scheme_id",
    "n",
    "replicate",
    "term_kind",
    "term_id",
    "sup_error",
    "param_error",
    "fit_status",
)

SUMMARY_COLUMNS = (
    "family",
    "scheme_id",
    "term_kind",
    "term_id",
    "n",
    "records",
    "median",
    "q25",
    "q75",
    "monotone_decreasing",
)


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    params: ModelParams
    scheme_name: str
    scheme: WeightScheme
    grid: tuple
    replicates: int
    seed: int
    sampler: str = "exact"
    gibbs_burn_in: int = 1000
    gibbs_sweeps: int = 1
    fit: FitConfig = field(default_factory=FitConfig)
    hidden_dim: int | None = None

    def __post_init__(self):
        if len(self.grid) < 1 or any(n < 1 for n in self.grid):
            raise ValueError("grid must hold positive sample sizes")
        if any(prev >= nxt for prev, nxt in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.sampler not in ("exact", "gibbs"):
            raise ValueError(f"unknown sampler {self.sampler!r}")


@dataclass(frozen=True)
class ConvergenceRecord:
    """One weighted term of one fitted cell, compared against the truth."""

    family: str
    scheme_id: str
    n: int
    replicate: int
    term_kind: str
    term_id: str
    sup_error: float
    param_error: float
    fit_status: str

    def csv_row(self) -> str:
        return ",".join(
            [
                self.family,
                self.scheme_id,
                str(self.n),
                str(self.replicate),
                self.term_kind,
                self.term_id,
                format(self.sup_error, ".17g"),
                format(self.param_error, ".17g"),
                self.fit_status,
            ]
        )


def _cell_init_seed(master: int, ordinal: int) -> int:
    # distinct odd-offset affine images keep fit-init streams disjoint from
    # the sampling streams, which use (master, ordinal) directly
    return (master * 0x9E3779B97F4A7C15 + 2 * ordinal + 1) % (1 << 64)


def _param_error(cfg: ExperimentConfig, report: FitReport) -> float:
    """Sup-norm parameter distance where the parameterization is identifiable."""
    if cfg.family == "categorical":
        return float(np.max(np.abs(report.params.pi - cfg.params.pi)))
    if cfg.family == "fvbm":
        return float(
            max(
                np.max(np.abs(report.params.M - cfg.params.M)),
                np.max(np.abs(report.params.b - cfg.params.b)),
            )
        )
    return float("nan")  # rbm: hidden-unit relabeling makes parameters non-identifiable


def _term_errors(cfg: ExperimentConfig, fitted_joint, refs) -> list[tuple[str, str, float]]:
    out = []
    for sub, ref in refs["marginals"]:
        fit_marg = marginalize(fitted_joint, sub)
        out.append(("marginal", sub.text(), float(np.max(np.abs(fit_marg.probs - ref.probs)))))
    for part, ref in refs["conditionals"]:
        fit_cond = condition(fitted_joint, part)
        rows = ref.defined
        if not np.any(rows):
            out.append(("conditional", part.text(), 0.0))
            continue
        if np.any(rows & ~fit_cond.defined):
            err = 1.0  # fitted model assigns zero mass to a realizable conditioning event
        else:
            err = float(np.max(np.abs(fit_cond.probs[rows] - ref.probs[rows])))
        out.append(("conditional", part.text(), err))
    return out


def _run_cell(cfg: ExperimentConfig, refs, ni: int, n: int, rep: int) -> list[ConvergenceRecord]:
    ordinal = ni * cfg.replicates + rep
    seed = SeedSpec(cfg.seed, ordinal)
    if cfg.sampler == "exact":
        data = sample_exact(cfg.params.joint(), n, seed)
    else:
        data = sample_gibbs(
            cfg.params, n, seed, sweeps_per_draw=cfg.gibbs_sweeps, burn_in=cfg.gibbs_burn_in
        )
    objective = "native" if cfg.scheme_name == _native_scheme_name(cfg.family) else cfg.scheme
    fit_cfg = dataclasses.replace(cfg.fit, init_seed=_cell_init_seed(cfg.seed, ordinal))
    report = fit_mpl(cfg.family, data, objective, fit_cfg, r=cfg.hidden_dim)
    fitted_joint = report.params.joint()
    perr = _param_error(cfg, report)
    return [
        ConvergenceRecord(
            family=cfg.family,
            scheme_id=cfg.scheme_name,
            n=n,
            replicate=rep,
            term_kind=kind,
            term_id=term_id,
            sup_error=err,
            param_error=perr,
            fit_status=report.status,
        )
        for kind, term_id, err in _term_errors(cfg, fitted_joint, refs)
    ]


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> list[ConvergenceRecord]:
    """Run every (n, replicate) cell; optionally write records.csv plus a sidecar.

    The finite pseudo-entropy precondition is checked first, on every run.
    Non-converged fits are recorded with their status flag, never dropped.
    """
    truth = cfg.params.joint()
    bound = entropy_term_bound_check(truth, cfg.scheme)
    if not bound.finite:
        raise DomainError("the generative model has non-finite pseudo-entropy under this scheme")

    refs = {
        "marginals": [(s, marginalize(truth, s)) for s in cfg.scheme.active_subsets()],
        "conditionals": [(t, condition(truth, t)) for t in cfg.scheme.active_partitions()],
    }
    cells = [(ni, n, rep) for ni, n in enumerate(cfg.grid) for rep in range(cfg.replicates)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {cell: pool.submit(_run_cell, cfg, refs, *cell) for cell in cells}
        chunks = [futures[cell].result() for cell in cells]
    else:
        chunks = [_run_cell(cfg, refs, *cell) for cell in cells]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.n, r.replicate, r.term_kind, r.term_id))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "records.csv")
        write_records(path, records)
        meta = {
            "generator": GENERATOR_ID,
            "backend": active_backend(),
            "entropy": {
                "value": bound.value,
                "bound": bound.bound,
                "max_summand": bound.max_summand,
            },
            "config": config_to_text(cfg),
        }
        with open(path + ".meta.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return records


def write_records(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(RECORD_COLUMNS) + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def read_records(path) -> list[ConvergenceRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != list(RECORD_COLUMNS):
            raise ParseError(f"unexpected records header {header}")
        for line in fh:
            if not line.strip():
                continue
            toks = line.strip().split(",")
            out.append(
                ConvergenceRecord(
                    family=toks[0],
                    scheme_id=toks[1],
                    n=int(toks[2]),
                    replicate=int(toks[3]),
                    term_kind=toks[4],
                    term_id=toks[5],
                    sup_error=float(toks[6]),
                    param_error=float(toks[7]),
                    fit_status=toks[8],
                )
            )
    return out


@dataclass(frozen=True)
class SummaryRow:
    family: str
    scheme_id: str
    term_kind: str
    term_id: str
    n: int
    records: int
    median: float
    q25: float
    q75: float
    monotone_decreasing: bool

    def csv_row(self) -> str:
        return ",".join(
            [
                self.family,
                self.scheme_id,
                self.term_kind,
                self.term_id,
                str(self.n),
                str(self.records),
                format(self.median, ".17g"),
                format(self.q25, ".17g"),
                format(self.q75, ".17g"),
                str(int(self.monotone_decreasing)),
            ]
        )


def summarize(records) -> list[SummaryRow]:
    """Median and quartiles of each term's error per sample size, plus a per-term
    flag marking strictly decreasing medians along the full grid.

    Parameter errors, where defined, are aggregated as an extra `param` term.
    Empty input gives an empty summary (the CLI reports it explicitly).
    """
    if not records:
        return []
    groups: dict[tuple, list[float]] = {}
    param_cells: dict[tuple, float] = {}
    for rec in records:
        key = (rec.family, rec.scheme_id, rec.term_kind, rec.term_id, rec.n)
        groups.setdefault(key, []).append(rec.sup_error)
        if not math.isnan(rec.param_error):
            param_cells[(rec.family, rec.scheme_id, rec.n, rec.replicate)] = rec.param_error
    for (family, scheme_id, n, _rep), err in sorted(param_cells.items()):
        groups.setdefault((family, scheme_id, "param", "packed", n), []).append(err)

    medians: dict[tuple, dict[int, float]] = {}
    stats: dict[tuple, tuple] = {}
    for key, errs in groups.items():
        arr = np.asarray(errs)
        med = float(np.median(arr))
        stats[key] = (len(errs), med, float(np.percentile(arr, 25)), float(np.percentile(arr, 75)))
        medians.setdefault(key[:4], {})[key[4]] = med

    monotone: dict[tuple, bool] = {}
    for term_key, by_n in medians.items():
        ns = sorted(by_n)
        monotone[term_key] = all(by_n[a] > by_n[b] for a, b in zip(ns, ns[1:]))

    rows = []
    for key in sorted(stats, key=lambda k: (k[2], k[3], k[4])):
        count, med, q25, q75 = stats[key]
        rows.append(
            SummaryRow(
                family=key[0],
                scheme_id=key[1],
                term_kind=key[2],
                term_id=key[3],
                n=key[4],
                records=count,
                median=med,
                q25=q25,
                q75=q75,
                monotone_decreasing=monotone[key[:4]],
            )
        )
    return rows


def write_summary(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_FIT_KEYS = {
    "fit_restarts": ("restarts", int),
    "fit_max_iter": ("max_iter", int),
    "fit_grad_tol": ("grad_tol", float),
    "fit_param_bound": ("param_bound", float),
}

_KNOWN_KEYS = {
    "family",
    "q",
    "r",
    "pi",
    "M",
    "a",
    "b",
    "scheme",
    "grid",
    "replicates",
    "seed",
    "sampler",
    "n",
    "out",
    "gibbs_burn_in",
    "gibbs_sweeps",
} | set(_FIT_KEYS)


@dataclass(frozen=True)
class RunConfig:
    """Everything a config file can carry; subcommands validate what they need."""

    params: ModelParams
    scheme_name: str | None
    scheme: WeightScheme | None
    grid: tuple | None
    replicates: int | None
    seed: int | None
    sampler: str
    n: int | None
    out: str | None
    gibbs_burn_in: int
    gibbs_sweeps: int
    fit: FitConfig

    def experiment(self, seed_override: int | None = None) -> ExperimentConfig:
        missing = [
            key
            for key, val in (
                ("scheme", self.scheme),
                ("grid", self.grid),
                ("replicates", self.replicates),
                ("seed", self.seed if seed_override is None else seed_override),
            )
            if val is None
        ]
        if missing:
            raise ParseError(f"experiment config is missing: {', '.join(missing)}")
        return ExperimentConfig(
            family=family_of(self.params),
            params=self.params,
            scheme_name=self.scheme_name,
            scheme=self.scheme,
            grid=self.grid,
            replicates=self.replicates,
            seed=self.seed if seed_override is None else seed_override,
            sampler=self.sampler,
            gibbs_burn_in=self.gibbs_burn_in,
            gibbs_sweeps=self.gibbs_sweeps,
            fit=self.fit,
            hidden_dim=getattr(self.params, "r", None),
        )


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    kv = parse_kv_lines(text)
    unknown = set(kv) - _KNOWN_KEYS
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(sorted(unknown))}")
    params = params_from_kv(kv)
    q = params.q

    scheme = None
    scheme_name = None
    if "scheme" in kv:
        scheme_name = take_str(kv, "scheme")
        if scheme_name.startswith("file:"):
            scheme = scheme_from_file(os.path.join(base_dir, scheme_name[5:]))
            scheme_name = "custom"
        else:
            scheme = scheme_by_name(scheme_name, q)

    grid = None
    if "grid" in kv:
        try:
            grid = tuple(int(tok) for tok in kv["grid"])
        except ValueError:
            raise ParseError("grid values must be integers") from None

    fit_kwargs = {}
    for key, (attr, cast) in _FIT_KEYS.items():
        if key in kv:
            toks = kv[key]
            if len(toks) != 1:
                raise ParseError(f"key {key!r} expects one value")
            try:
                fit_kwargs[attr] = cast(toks[0])
            except ValueError:
                raise ParseError(f"key {key!r}: bad value {toks[0]!r}") from None

    return RunConfig(
        params=params,
        scheme_name=scheme_name,
        scheme=scheme,
        grid=grid,
        replicates=take_int(kv, "replicates") if "replicates" in kv else None,
        seed=take_int(kv, "seed") if "seed" in kv else None,
        sampler=take_str(kv, "sampler") if "sampler" in kv else "exact",
        n=take_int(kv, "n") if "n" in kv else None,
        out=take_str(kv, "out") if "out" in kv else None,
        gibbs_burn_in=take_int(kv, "gibbs_burn_in") if "gibbs_burn_in" in kv else 1000,
        gibbs_sweeps=take_int(kv, "gibbs_sweeps") if "gibbs_sweeps" in kv else 1,
        fit=FitConfig(**fit_kwargs),
    )


def parse_config_file(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = [params_to_text(cfg.params).rstrip("\n")]
    lines.append(f"scheme {cfg.scheme_name}")
    lines.append("grid " + " ".join(str(n) for n in cfg.grid))
    lines.append(f"replicates {cfg.replicates}")
    lines.append(f"seed {cfg.seed}")
    lines.append(f"sampler {cfg.sampler}")
    return "\n".join(lines) + "\n"
