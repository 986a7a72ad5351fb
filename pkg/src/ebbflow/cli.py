"""Command line interface.

    ebbflow run <scenario.toml> [--out trace.jsonl] [--seed N] [--check all|names|none]
    ebbflow check <trace.jsonl> [--check ...]
    ebbflow attack <name> --n N --colluders K [--slots S] [--out ...]

Exit codes: 0 all selected checkers agree with expectations, 1 a checker
disagrees, 2 configuration error.  EBBFLOW_LOG controls log verbosity only.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from .attacks import ATTACK_SCENARIOS
from .checks import CHECKERS, run_checks
from .runner import run_and_check, run_scenario
from .scenario import ScenarioError, load_scenario
from .simnet import ScriptError
from .trace import Trace

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def _setup_logging() -> None:
    level = os.environ.get("EBBFLOW_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")


def _parse_checks(arg: str | None) -> list[str] | None:
    if arg is None or arg == "all":
        return None
    if arg == "none":
        return []
    names = [nm.strip() for nm in arg.split(",") if nm.strip()]
    for nm in names:
        if nm not in CHECKERS:
            raise ScenarioError("--check", f"unknown checker {nm!r}")
    return names


def _report(verdicts, expected_fail: tuple[str, ...]) -> int:
    worst = EXIT_OK
    for v in verdicts:
        applicable = v.info.get("applicable", True)
        expect_fail = v.checker in expected_fail
        ok = v.passed != expect_fail or not applicable
        tag = "PASS" if v.passed else "FAIL"
        if expect_fail and applicable:
            tag = "XFAIL" if not v.passed else "XPASS"
        extra = ""
        if not applicable:
            extra = f"  (n/a: {v.info.get('reason')})"
        elif not v.passed and v.witness:
            extra = f"  witness={v.witness}"
        elif v.info.get("warn"):
            extra = "  (advisory warning: sample below bound)"
        print(f"{tag:5s} {v.checker}{extra}")
        if not ok:
            worst = EXIT_CHECK_FAILED
    return worst


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    checks = _parse_checks(args.check)
    if checks == []:
        trace = run_scenario(scenario)
        verdicts = []
    else:
        trace, verdicts = run_and_check(scenario, checks)
    if args.out:
        trace.emit(args.out)
        print(f"trace written to {args.out} ({len(trace.records)} records)")
    return _report(verdicts, scenario.expected_fail)


def cmd_check(args) -> int:
    trace = Trace.load(args.trace).without_verdicts()
    checks = _parse_checks(args.check)
    verdicts = run_checks(trace, checks)
    expected = tuple(trace.header["scenario"].get("expect", {}).get("fail", ()))
    return _report(verdicts, expected)


def cmd_attack(args) -> int:
    if args.name not in ATTACK_SCENARIOS:
        raise ScenarioError(
            "attack", f"unknown attack {args.name!r}; known: {sorted(ATTACK_SCENARIOS)}"
        )
    builder = ATTACK_SCENARIOS[args.name]
    kwargs = {"n": args.n}
    if args.name == "double_finalization":
        kwargs["colluders"] = args.colluders
    if args.slots:
        kwargs["slots"] = args.slots
    if args.seed is not None:
        kwargs["seed"] = args.seed
    scenario = builder(**kwargs)
    trace, verdicts = run_and_check(scenario, _parse_checks(args.check))
    if args.out:
        trace.emit(args.out)
        print(f"trace written to {args.out} ({len(trace.records)} records)")
    return _report(verdicts, scenario.expected_fail)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebbflow",
        description="Deterministic ebb-and-flow consensus simulator and checkers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="write the trace (JSON lines) here")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--check", default="all",
                       help="comma-separated checker names, 'all' or 'none'")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="re-run checkers over a trace file")
    p_check.add_argument("trace")
    p_check.add_argument("--check", default="all")
    p_check.set_defaults(func=cmd_check)

    p_attack = sub.add_parser("attack", help="run a canned attack scenario")
    p_attack.add_argument("name", help=f"one of {sorted(ATTACK_SCENARIOS)}")
    p_attack.add_argument("--n", type=int, default=9)
    p_attack.add_argument("--colluders", type=int, default=3)
    p_attack.add_argument("--slots", type=int, default=None)
    p_attack.add_argument("--seed", type=int, default=None)
    p_attack.add_argument("--out")
    p_attack.add_argument("--check", default="all")
    p_attack.set_defaults(func=cmd_attack)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ScriptError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
