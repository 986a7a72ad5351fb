"""Trace records: line-delimited JSON, one event per line, header first.

Traces are self-contained: the block registry, every message with its
delivery schedule, per-phase state snapshots, activity transitions and the
compliance report can all be rebuilt from the file, so every checker re-runs
from the trace alone.  Serialization is canonical (sorted keys, fixed
separators); identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def b2h(b: bytes | None) -> str | None:
    return None if b is None else b.hex()


def compact_delivery(deliveries: dict[int, int]) -> dict:
    """{validator: round} encoded as the most common round plus exceptions."""
    if not deliveries:
        return {"default": None}
    counts: dict[int, int] = {}
    for rnd in deliveries.values():
        counts[rnd] = counts.get(rnd, 0) + 1
    default = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    exceptions = {
        str(v): rnd for v, rnd in sorted(deliveries.items()) if rnd != default
    }
    out: dict = {"default": default}
    if exceptions:
        out["except"] = exceptions
    return out


def expand_delivery(compact: dict, recipients: list[int]) -> dict[int, int]:
    default = compact.get("default")
    exceptions = {int(k): v for k, v in compact.get("except", {}).items()}
    out = {}
    for v in recipients:
        if v in exceptions:
            out[v] = exceptions[v]
        elif default is not None:
            out[v] = default
    return out


@dataclass
class Trace:
    header: dict
    records: list[dict] = field(default_factory=list)

    def lines(self):
        yield canonical_json(self.header)
        for rec in self.records:
            yield canonical_json(rec)

    def emit(self, path: str) -> None:
        with open(path, "w") as fh:
            for line in self.lines():
                fh.write(line)
                fh.write("\n")

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    @classmethod
    def load(cls, path: str) -> "Trace":
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty trace")
        header = json.loads(lines[0])
        if header.get("type") != "header":
            raise ValueError(f"{path}: first record is not a header")
        return cls(header=header, records=[json.loads(ln) for ln in lines[1:]])

    def verdicts(self) -> list[dict]:
        return [r for r in self.records if r.get("type") == "verdict"]

    def without_verdicts(self) -> "Trace":
        return Trace(
            header=self.header,
            records=[r for r in self.records if r.get("type") != "verdict"],
        )
