"""Command-line entry points.

    pseudolik sample        --config cfg.txt [--seed S] [--out dir]
    pseudolik fit           --config cfg.txt --data sample.csv [--out dir]
    pseudolik experiment    --config cfg.txt [--seed S] [--out dir] [--threads k]
    pseudolik summarize     --records records.csv [--out dir]
    pseudolik check-entropy --config cfg.txt

The config grammar is documented in the ``harness`` module.  ``fit`` exits 0
only when the optimizer converged; ``check-entropy`` exits 0 only when the
entropy functional is finite with every summand inside [0, 1/e].
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ParseError
from .estimate import _native_scheme_name, fit_mpl, write_fit_report
from .harness import parse_config_file, read_records, run_experiment, summarize, write_summary
from .models import family_of
from .pl import entropy_term_bound_check
from .sample import SeedSpec, sample_exact, sample_from_csv, sample_gibbs, write_sample


def _out_dir(args, cfg) -> str:
    out = args.out or (cfg.out if cfg is not None else None) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _require(value, name: str):
    if value is None:
        raise ParseError(f"config is missing required key {name!r}")
    return value


def cmd_sample(args) -> int:
    cfg = parse_config_file(args.config)
    out = _out_dir(args, cfg)
    n = _require(cfg.n, "n")
    seed_val = args.seed if args.seed is not None else _require(cfg.seed, "seed")
    seed = SeedSpec(seed_val)
    if cfg.sampler == "exact":
        data = sample_exact(cfg.params.joint(), n, seed)
    else:
        data = sample_gibbs(
            cfg.params, n, seed, sweeps_per_draw=cfg.gibbs_sweeps, burn_in=cfg.gibbs_burn_in
        )
    path = os.path.join(out, "sample.csv")
    write_sample(path, data, cfg.params, seed, cfg.sampler)
    print(f"wrote {path} ({n} draws, {cfg.sampler} sampler)")
    return 0


def cmd_fit(args) -> int:
    cfg = parse_config_file(args.config)
    out = _out_dir(args, cfg)
    with open(args.data, encoding="utf-8") as fh:
        data = sample_from_csv(fh.read())
    family = family_of(cfg.params)
    scheme = _require(cfg.scheme, "scheme")
    objective = "native" if cfg.scheme_name == _native_scheme_name(family) else scheme
    report = fit_mpl(family, data, objective, cfg.fit, r=getattr(cfg.params, "r", None))
    path = os.path.join(out, "fit_report.txt")
    write_fit_report(path, report)
    print(
        f"{family} fit: status={report.status} objective={report.objective:.10g} "
        f"grad_norm={report.grad_norm:.3g} iterations={report.iterations} -> {path}"
    )
    return 0 if report.status == "converged" else 1


def cmd_experiment(args) -> int:
    cfg = parse_config_file(args.config)
    out = _out_dir(args, cfg)
    exp = cfg.experiment(seed_override=args.seed)
    records = run_experiment(exp, out_dir=out, threads=args.threads)
    print(f"wrote {os.path.join(out, 'records.csv')} ({len(records)} rows)")
    return 0


def cmd_summarize(args) -> int:
    records = read_records(args.records)
    rows = summarize(records)
    out = _out_dir(args, None)
    path = os.path.join(out, "summary.csv")
    write_summary(path, rows)
    if not rows:
        print("empty-summary: no records to aggregate")
    else:
        print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_check_entropy(args) -> int:
    cfg = parse_config_file(args.config)
    scheme = _require(cfg.scheme, "scheme")
    report = entropy_term_bound_check(cfg.params.joint(), scheme)
    print(f"pseudo-entropy {report.value:.12g}")
    print(f"summands {report.summand_count}, max {report.max_summand:.12g} (cap 1/e)")
    print(f"bound {report.bound:.12g}, finite {report.finite}, within {report.all_within}")
    return 0 if report.finite and report.all_within else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudolik", description="Pseudolikelihood estimation for discrete models"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False, threads=False):
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default=None, help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if threads:
            p.add_argument("--threads", type=int, default=1, help="concurrent experiment cells")

    p = sub.add_parser("sample", help="draw a reproducible sample")
    common(p, seed=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("fit", help="fit a model to a sample by MPL")
    common(p)
    p.add_argument("--data", required=True, help="sample CSV path")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("experiment", help="run a convergence experiment")
    common(p, seed=True, threads=True)
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("summarize", help="aggregate experiment records")
    p.add_argument("--records", required=True, help="records CSV path")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(fn=cmd_summarize)

    p = sub.add_parser("check-entropy", help="finiteness certificate for a model and scheme")
    p.add_argument("--config", required=True, help="config file path")
    p.set_defaults(fn=cmd_check_entropy)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
