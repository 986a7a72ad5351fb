"""Run orchestration: single-mode runs, differential runs, checker wiring."""

from __future__ import annotations

from . import __version__
from .scenario import MODE_DIFFERENTIAL, Scenario
from .simnet import World
from .trace import Trace


def run_scenario(scenario: Scenario) -> Trace:
    """Execute a scenario.  Differential mode runs the same schedule under
    both protocol variants and interleaves the records, tagged per run."""
    scenario.validate()
    if scenario.mode != MODE_DIFFERENTIAL:
        return World(scenario).run()
    traces = {}
    for mode in ("A", "B"):
        traces[mode] = World(scenario, mode=mode).run()
    records = []
    for mode in ("A", "B"):
        for rec in traces[mode].records:
            rec = dict(rec)
            rec["run"] = mode
            records.append(rec)
    header = {
        "type": "header",
        "format": 1,
        "package": f"ebbflow {__version__}",
        "hash_fn": "sha256",
        "mode": MODE_DIFFERENTIAL,
        "scenario": scenario.to_dict(),
    }
    return Trace(header=header, records=records)


def run_and_check(scenario: Scenario, checks: list[str] | None = None):
    """Run and verify; returns (trace, verdicts).  Verdict records are
    appended to the trace so emitted files carry their own verdicts."""
    from .checks import run_checks

    trace = run_scenario(scenario)
    verdicts = run_checks(trace, checks)
    for v in verdicts:
        trace.records.append(v.to_record())
    return trace, verdicts
