"""Command line entry point: run, validate and list experiments."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ShockLabError
from .experiments import experiment_names, load_config, run_experiment, validate_config
from .experiments.registry import PARAMS, resolve_params

log = logging.getLogger("shocklab")


def _add_config_args(p):
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-path override, e.g. shock.eps=0.05 (repeatable)")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shocklab", description="viscous shock contraction experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write its artifact bundle")
    _add_config_args(run)
    run.add_argument("--out", default=None, help="output directory (default: config 'out')")
    val = sub.add_parser("validate", help="check a config without running it")
    _add_config_args(val)
    sub.add_parser("list-experiments", help="list registered experiments and their parameters")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "list-experiments":
        for name in experiment_names():
            params = ", ".join(f"{k}={v}" for k, v in PARAMS[name].items())
            print(f"{name}: {params}")
        return 0
    try:
        cfg = load_config(args.config, args.override, seed=args.seed,
                          out=getattr(args, "out", None))
        warnings = validate_config(cfg)
        resolve_params(cfg)
    except ShockLabError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for w in warnings:
        log.warning(w)
    if args.command == "validate":
        print(f"ok {cfg.experiment} {cfg.config_hash()}")
        return 0
    try:
        out, records = run_experiment(cfg)
    except ShockLabError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    failed = [r["name"] for r in records if not r["passed"]]
    for r in records:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}")
    print(f"artifacts: {out}")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
