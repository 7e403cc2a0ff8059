"""Command line: ``simulate``, ``verify`` and ``list-scenarios``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiment, verify
from .config import ConfigError

log = logging.getLogger(__name__)


def _load(ref):
    try:
        return experiment.load_scenario(ref)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(args):
    cfg = _load(args.config)
    result = experiment.run(cfg, out=args.out, decimate=args.decimate)
    if not result.summary.ok:
        print(f"aborted: {result.summary.error}", file=sys.stderr)
    return result.exit_code


def cmd_verify(args):
    cfg = _load(args.config) if args.config else None
    names = verify.select(args.filter, cfg)
    if not names:
        print(f"no property matches {args.filter!r}; known: {', '.join(verify.PROPERTIES)}", file=sys.stderr)
        return experiment.EXIT_USAGE
    results = verify.run_suite(names, config=cfg, stream=sys.stdout)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.as_dict() for r in results], fh, indent=2, default=float)
    return experiment.EXIT_OK if not failed else experiment.EXIT_SIM_FAILED


def cmd_list(args):
    for name in experiment.list_scenarios():
        cfg = experiment.load_scenario(name)
        first = cfg.description.split(". ")[0].rstrip(".")
        print(f"{name:<32} {cfg.controller.law:<24} {cfg.integration.duration:>6g} s  {first}")
    return experiment.EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="collocated-adaptive",
        description="Adaptive collocated control of underactuated arms: simulation and verification.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write its CSV trace")
    p.add_argument("--config", required=True, help="config file, or the name of a bundled scenario")
    p.add_argument("--out", help="trace path (default: the config's output.trace)")
    p.add_argument("--decimate", type=int, help="keep every N-th step (default: config, else 10)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the property suite")
    p.add_argument("--config", help="check trajectory properties on this scenario instead of the bundled ones")
    p.add_argument("--filter", help="comma-separated substrings of property names to run")
    p.add_argument("--json", help="also write the results as JSON to this path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list-scenarios", help="list the bundled scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "decimate", None) is not None and args.decimate < 1:
        parser.error("--decimate must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return experiment.EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return experiment.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
