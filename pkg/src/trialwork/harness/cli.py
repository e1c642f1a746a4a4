"""Command line entry point.

Exit codes: 0 all checks passed, 1 violations found, 2 config or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from ..variational import default_family, minimize
from ..work import free_energy_change, jarzynski_exact, tpm_work_distribution
from .config import ConfigError, ExperimentConfig, load_config
from .seeds import derive_seed
from .suite import run_suite, sweep, sweep_columns, trial_inputs

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


class _IOProblem(Exception):
    pass


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _writable(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK) or (p.exists() and not os.access(p, os.W_OK)):
        raise _IOProblem(f"cannot write to {path}")
    return p


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "suite", None) is not None:
        overrides["suites"] = [args.suite]
    return cfg.replace(**overrides) if overrides else cfg


def cmd_verify(args) -> int:
    cfg = _load(args)
    out = _writable(args.out or cfg.outputs.get("report"))
    report = run_suite(cfg)
    text = dump_json(report.to_dict())
    if out is None:
        print(text)
    else:
        out.write_text(text + "\n")
        bad = len(report.failures)
        print(f"{sum(c['count'] for c in report.checks.values())} checks, {bad} failures -> {out}", file=sys.stderr)
    return EXIT_OK if report.all_passed else EXIT_VIOLATION


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _writable(args.csv or cfg.outputs.get("csv"))
    if args.steps < 1:
        raise ConfigError("--steps", "must be >= 1")
    grid = np.linspace(args.start, args.stop, args.steps) if args.steps > 1 else np.array([args.start])
    if args.axis == "N":
        grid = np.unique(np.round(grid).astype(int))
    rows = sweep(cfg, args.axis, grid.tolist())
    fh = out.open("w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=sweep_columns(args.axis), extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    finally:
        if out:
            fh.close()
    return EXIT_OK if all(r["satisfied"] for r in rows) else EXIT_VIOLATION


def cmd_sample_work(args) -> int:
    cfg = _load(args)
    out = _writable(args.out)
    inp = trial_inputs(cfg, args.trial)
    beta = cfg.beta[0]
    exact = jarzynski_exact(inp.protocol, beta, cfg.slices)[1]
    if args.enumerate:
        dist = tpm_work_distribution(inp.protocol, beta, cfg.slices)
        summary = {"mode": "enumerated", "exp_work_average": dist.exp_average(), "free_energy_side": exact}
        ok = abs(dist.exp_average() - exact) <= 1e-10 * exact
    else:
        seed = derive_seed(cfg.master_seed, args.trial, "tpm") if args.sample_seed is None else args.sample_seed
        dist = tpm_work_distribution(inp.protocol, beta, cfg.slices, "sampled", args.samples, seed)
        est, se = dist.exp_average(), dist.standard_error()
        z = (est - exact) / se if se > 0 else (0.0 if est == exact else math.inf)
        summary = {
            "mode": "sampled", "samples": args.samples, "seed": seed,
            "estimate": est, "standard_error": se, "free_energy_side": exact, "z_score": z,
        }
        ok = abs(z) <= 4.0
    if out is not None:
        dist.write(out)
    print(dump_json(summary))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_variational(args) -> int:
    cfg = _load(args)
    out = _writable(args.out)
    summary_path = _writable(args.summary)
    inp = trial_inputs(cfg, args.trial)
    beta = cfg.beta[0]
    family = default_family(inp.protocol, derive_seed(cfg.master_seed, args.trial, "family"))
    trace = minimize(family, beta, cfg.slices, args.max_evals, args.tolerance, derive_seed(cfg.master_seed, args.trial, "optimizer"))
    dF = free_energy_change(inp.protocol, beta)
    floor = dF - 1e-9 * abs(dF)
    below = sum(v < floor for _, v in trace.iterates)
    extra = {"exact_dF": dF, "gap": trace.best_value - dF, "evaluations_below_exact": below}
    if out is not None:
        trace.write_csv(out)
    if summary_path is not None:
        trace.write_json(summary_path, **extra)
    print(dump_json({**trace.summary(), **extra}))
    return EXIT_OK if below == 0 else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trialwork", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int)

    v = sub.add_parser("verify", help="run the verification suites")
    common(v)
    v.add_argument("--suite", choices=["all", "identities", "bounds", "norms"])
    v.add_argument("--out", help="report JSON path (stdout if omitted)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="bound slacks along one parameter axis")
    common(s)
    s.add_argument("--axis", choices=["epsilon", "beta", "N"], required=True)
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=int, default=11)
    s.add_argument("--csv", help="output CSV (stdout if omitted)")
    s.set_defaults(func=cmd_sweep)

    w = sub.add_parser("sample-work", help="two-point-measurement work samples")
    common(w)
    w.add_argument("--samples", type=int, default=100000)
    w.add_argument("--sample-seed", type=int)
    w.add_argument("--trial", type=int, default=0, help="which trial's protocol to use")
    w.add_argument("--enumerate", action="store_true", help="write the exact distribution instead")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sample_work)

    o = sub.add_parser("variational", help="minimise the certified free-energy bound")
    common(o)
    o.add_argument("--max-evals", type=int, default=2000)
    o.add_argument("--tolerance", type=float, default=1e-8)
    o.add_argument("--trial", type=int, default=0)
    o.add_argument("--out", help="trace CSV")
    o.add_argument("--summary", help="summary JSON")
    o.set_defaults(func=cmd_variational)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (_IOProblem, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
