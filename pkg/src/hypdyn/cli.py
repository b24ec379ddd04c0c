"""``hypdyn`` command line: run scenarios, reproduce worked examples, list them.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import (
    ConfigurationError,
    DomainError,
    InvalidLabel,
    MonotonicityViolated,
    NonExpansionViolated,
    NoRepellingCertificate,
    NumericalNonConvergence,
    VerificationFailure,
)
from .export import write_report

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

log = logging.getLogger("hypdyn")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypdyn", description="Dynamics of non-expanding maps on hyperbolic model spaces.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="repeat for more detail")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario", help="path to a scenario JSON file")
    run.add_argument("--out", default=".", help="directory for the report and trace (default: .)")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    rep = sub.add_parser("reproduce", help="run the worked-example registry")
    rep.add_argument("--filter", default=None, help="substring of an example id or module tag")
    rep.add_argument("--out", default=None, help="write the JSON summary here")

    sub.add_parser("list-examples", help="list registry entries")
    return ap


def _cmd_run(args) -> int:
    from .scenario import load_scenario, run

    scenario = load_scenario(args.scenario)
    result = run(scenario, args.out, args.seed)
    for f in result.files:
        log.info("wrote %s", f)
    if not result.verified:
        print("verification failed; see the report", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    from .registry import reproduce_all, summary_table

    results = reproduce_all(filter_substr=args.filter)
    if not results:
        raise ConfigurationError(f"no registry entry matches {args.filter!r}")
    print(summary_table(results))
    failed = [r.id for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} entries passed")
    if args.out:
        write_report(args.out, {"entries": [r.to_dict() for r in results]})
    return EXIT_VERIFICATION if failed else EXIT_OK


def _cmd_list(args) -> int:
    from .registry import list_entries

    for e in list_entries():
        print(f"{e.id:<24} [{','.join(e.tags)}] {e.title}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    handler = {"run": _cmd_run, "reproduce": _cmd_reproduce, "list-examples": _cmd_list}[args.command]
    try:
        return handler(args)
    except (ConfigurationError, InvalidLabel) as exc:
        print(f"configuration error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalNonConvergence as exc:
        print(f"numerical non-convergence ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (VerificationFailure, NoRepellingCertificate, MonotonicityViolated, NonExpansionViolated, DomainError) as exc:
        print(f"verification failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
