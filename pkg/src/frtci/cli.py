"""Command-line entry points.

    frtci test        --config cfg.yaml --out results/ [--seed S] [--draws R]
    frtci sensitivity --config cfg.yaml --out results/ [--seed S] [--alpha A]
    frtci simulate    <suite> --out results/ [--seed S]
    frtci check       <suite> --out results/ [--seed S]

`simulate` and `check` both accept any of: lemma1, lemma2, lemma3,
theorem1, theorem2, prop1, prop2. The process exits nonzero when a suite
reports a failed check.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .io import load_config, run_checks, run_sensitivity, run_test
from .validation import SUITES


def _add_common(parser):
    parser.add_argument("--config", required=True, help="YAML analysis config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--draws", type=int, default=None, help="override config draws")
    parser.add_argument("--alpha", type=float, default=None, help="override config alpha")


def _load(args):
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.draws is not None:
        overrides["draws"] = args.draws
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    return dataclasses.replace(config, **overrides) if overrides else config


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="frtci",
                                     description="randomization tests for conditional independence")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="per-year randomization p-values")
    _add_common(p_test)
    p_test.add_argument("--threads", type=int, default=1)

    p_sens = sub.add_parser("sensitivity", help="confounding sensitivity curves")
    _add_common(p_sens)

    for verb in ("simulate", "check"):
        p = sub.add_parser(verb, help="run a validation suite")
        p.add_argument("suite", choices=sorted(SUITES))
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override suite seed")

    args = parser.parse_args(argv)
    if args.command == "test":
        run_test(_load(args), args.out, threads=args.threads)
        return 0
    if args.command == "sensitivity":
        run_sensitivity(_load(args), args.out)
        return 0
    rows = run_checks(args.suite, args.out, seed=args.seed)
    for row in rows:
        status = "pass" if row.passed else "FAIL"
        print(f"[{status}] {row.suite} {row.metric}: {row.value:.6g} "
              f"{row.comparison} {row.threshold:.6g}")
    return 0 if all(r.passed for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
