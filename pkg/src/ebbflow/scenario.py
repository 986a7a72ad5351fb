"""Scenario configuration: run parameters, schedules, attack selection.

Scenario files are TOML (key/value plus tables); the exact field names are
frozen in docs/formats.md.  Times are in rounds, horizons in slots; sleep
intervals are half-open [start, end).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any

from .blocks import make_tx

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODE_A = "A"
MODE_B = "B"
MODE_DIFFERENTIAL = "differential"

DEFAULT_HORIZON_CAP = 4096


class ScenarioError(ValueError):
    """Configuration rejected, with a field-level diagnostic."""

    def __init__(self, fld: str, msg: str):
        self.field = fld
        super().__init__(f"{fld}: {msg}")


@dataclass(frozen=True)
class SleepInterval:
    validator: int
    start: int
    end: int


@dataclass(frozen=True)
class Corruption:
    validator: int
    round: int


@dataclass(frozen=True)
class TxInjection:
    round: int
    ids: tuple[bytes, ...]


@dataclass(frozen=True)
class AttackSpec:
    name: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class Scenario:
    n: int
    horizon_slots: int
    delta: int = 1
    kappa: int = 2
    gst: int = 0
    gat: int = 0
    seed: int = 0
    mode: str = MODE_B
    proposer_overrides: dict[int, int] = field(default_factory=dict)
    sleep: tuple[SleepInterval, ...] = ()
    corruptions: tuple[Corruption, ...] = ()
    attack: AttackSpec | None = None
    txs: tuple[TxInjection, ...] = ()
    expected_fail: tuple[str, ...] = ()
    t_after: int = 0
    horizon_cap: int = DEFAULT_HORIZON_CAP

    @property
    def horizon_rounds(self) -> int:
        return 4 * self.delta * self.horizon_slots

    def validate(self) -> None:
        if self.n < 1:
            raise ScenarioError("n", f"need at least one validator, got {self.n}")
        if self.delta < 1:
            raise ScenarioError("delta", f"must be >= 1, got {self.delta}")
        if self.kappa <= 1:
            raise ScenarioError("kappa", f"must be > 1, got {self.kappa}")
        if self.horizon_slots < 1:
            raise ScenarioError("horizon_slots", "must be >= 1")
        if self.horizon_slots > self.horizon_cap:
            raise ScenarioError(
                "horizon_slots",
                f"{self.horizon_slots} exceeds the cap {self.horizon_cap}",
            )
        if self.gst < 0 or self.gat < 0:
            raise ScenarioError("gst", "gst/gat must be >= 0")
        if self.mode not in (MODE_A, MODE_B, MODE_DIFFERENTIAL):
            raise ScenarioError("mode", f"unknown mode {self.mode!r}")
        for slot, vid in self.proposer_overrides.items():
            if slot < 0 or not 0 <= vid < self.n:
                raise ScenarioError("proposer_overrides", f"bad entry {slot} -> {vid}")
        for iv in self.sleep:
            if not 0 <= iv.validator < self.n:
                raise ScenarioError("sleep", f"unknown validator {iv.validator}")
            if iv.start < 0 or iv.end <= iv.start:
                raise ScenarioError("sleep", f"bad interval [{iv.start}, {iv.end})")
            if iv.end > self.gat:
                raise ScenarioError(
                    "gat",
                    f"all validators stay awake from gat={self.gat}, but validator "
                    f"{iv.validator} is scheduled to sleep until {iv.end}",
                )
        for c in self.corruptions:
            if not 0 <= c.validator < self.n:
                raise ScenarioError("corrupt", f"unknown validator {c.validator}")
            if c.round < 0:
                raise ScenarioError("corrupt", f"bad round {c.round}")
        for tx in self.txs:
            if tx.round < 0:
                raise ScenarioError("tx", f"bad round {tx.round}")
        if self.mode == MODE_DIFFERENTIAL and self.corruptions:
            raise ScenarioError("mode", "differential mode supports honest-only runs")

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "n": self.n,
            "delta": self.delta,
            "kappa": self.kappa,
            "gst": self.gst,
            "gat": self.gat,
            "horizon_slots": self.horizon_slots,
            "seed": self.seed,
            "mode": self.mode,
            "t_after": self.t_after,
            "horizon_cap": self.horizon_cap,
        }
        if self.proposer_overrides:
            out["proposer_overrides"] = {
                str(k): v for k, v in sorted(self.proposer_overrides.items())
            }
        if self.sleep:
            out["sleep"] = [
                {"validator": s.validator, "start": s.start, "end": s.end}
                for s in self.sleep
            ]
        if self.corruptions:
            out["corrupt"] = [
                {"validator": c.validator, "round": c.round} for c in self.corruptions
            ]
        if self.attack:
            out["attack"] = {"name": self.attack.name, "params": self.attack.params}
        if self.txs:
            out["tx"] = [
                {"round": t.round, "ids": [i.hex() for i in t.ids]} for t in self.txs
            ]
        if self.expected_fail:
            out["expect"] = {"fail": list(self.expected_fail)}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        def need(key, typ):
            if key not in data:
                raise ScenarioError(key, "missing required field")
            val = data[key]
            if typ is int and (not isinstance(val, int) or isinstance(val, bool)):
                raise ScenarioError(key, f"expected integer, got {val!r}")
            return val

        known = {
            "n", "delta", "kappa", "gst", "gat", "horizon_slots", "seed", "mode",
            "proposer_overrides", "sleep", "corrupt", "attack", "tx", "expect",
            "t_after", "horizon_cap",
        }
        for key in data:
            if key not in known:
                raise ScenarioError(key, "unknown field")

        txs = []
        for i, entry in enumerate(data.get("tx", ())):
            rnd = entry.get("round")
            if not isinstance(rnd, int):
                raise ScenarioError(f"tx[{i}].round", "expected integer")
            if "ids" in entry:
                ids = tuple(bytes.fromhex(h) for h in entry["ids"])
            elif "count" in entry:
                ids = tuple(
                    make_tx(f"inj:{rnd}:{k}") for k in range(int(entry["count"]))
                )
            else:
                raise ScenarioError(f"tx[{i}]", "needs 'ids' or 'count'")
            txs.append(TxInjection(rnd, ids))

        attack = None
        if "attack" in data:
            a = data["attack"]
            if not isinstance(a.get("name"), str):
                raise ScenarioError("attack.name", "expected string")
            attack = AttackSpec(a["name"], dict(a.get("params", {})))

        sc = cls(
            n=need("n", int),
            horizon_slots=need("horizon_slots", int),
            delta=data.get("delta", 1),
            kappa=data.get("kappa", 2),
            gst=data.get("gst", 0),
            gat=data.get("gat", 0),
            seed=data.get("seed", 0),
            mode=data.get("mode", MODE_B),
            proposer_overrides={
                int(k): int(v)
                for k, v in data.get("proposer_overrides", {}).items()
            },
            sleep=tuple(
                SleepInterval(s["validator"], s["start"], s["end"])
                for s in data.get("sleep", ())
            ),
            corruptions=tuple(
                Corruption(c["validator"], c["round"]) for c in data.get("corrupt", ())
            ),
            attack=attack,
            txs=tuple(txs),
            expected_fail=tuple(data.get("expect", {}).get("fail", ())),
            t_after=data.get("t_after", 0),
            horizon_cap=data.get("horizon_cap", DEFAULT_HORIZON_CAP),
        )
        sc.validate()
        return sc


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("<file>", f"TOML parse error: {exc}") from exc
    return Scenario.from_dict(data)


def reduced_participation_scenario(
    n: int = 10,
    awake: int = 6,
    slots: int = 16,
    kappa: int = 3,
    seed: int = 13,
    delta: int = 1,
    tx_rounds: tuple[int, ...] = (0,),
    mode: str = MODE_B,
) -> Scenario:
    """Only `awake` of n validators ever participate (the rest sleep through
    the whole run), with proposers drawn from the awake set so the depth rule
    keeps confirming on schedule.  Below a two-thirds quorum this produces no
    fast confirmations and no justifications: the depth rule alone advances."""
    horizon = 4 * delta * slots
    return Scenario(
        n=n,
        delta=delta,
        kappa=kappa,
        gst=0,
        gat=horizon,
        horizon_slots=slots,
        seed=seed,
        mode=mode,
        proposer_overrides={t: t % awake for t in range(slots)},
        sleep=tuple(SleepInterval(v, 0, horizon) for v in range(awake, n)),
        txs=tuple(
            TxInjection(r, tuple(make_tx(f"rp:{seed}:{r}:{k}") for k in range(2)))
            for r in tx_rounds
        ),
    )


def random_compliant_scenario(
    seed: int,
    n_max: int = 30,
    slots: int = 40,
    adversarial: bool = True,
    mode: str = MODE_B,
    n_min: int = 4,
) -> Scenario:
    """Randomized schedule that satisfies the sleepiness constraint by
    construction: a core of f+1 honest validators never sleeps and is never
    corrupted, so the honest carry-over at every vote round outstrips the
    adversary.  Everyone else sleeps and wakes at random; up to f < n/3
    validators are corrupted at random rounds (driving the equivocation
    script when adversarial)."""
    import random as _random

    rng = _random.Random(seed)
    n = rng.randint(n_min, n_max)
    delta = rng.choice([1, 1, 1, 2])
    horizon = 4 * delta * slots
    f = rng.randint(0, (n - 1) // 3) if adversarial else 0
    ids = list(range(n))
    rng.shuffle(ids)
    corrupted = ids[:f]
    honest = ids[f:]
    core = set(honest[: f + 1])
    sleep = []
    for v in honest:
        if v in core:
            continue
        for _ in range(rng.randint(0, 2)):
            start = rng.randrange(0, horizon)
            length = rng.randint(1, 12 * delta)
            sleep.append(SleepInterval(v, start, min(start + length, horizon)))
    gat = max((iv.end for iv in sleep), default=0)
    corruptions = tuple(
        Corruption(v, rng.randrange(0, horizon)) for v in sorted(corrupted)
    )
    txs = tuple(
        TxInjection(rng.randrange(0, max(1, horizon // 2)), (make_tx(f"r{seed}:{k}"),))
        for k in range(rng.randint(0, 3))
    )
    attack = AttackSpec("equivocation") if corruptions else None
    return Scenario(
        n=n,
        delta=delta,
        kappa=rng.randint(2, 4),
        gst=0,
        gat=gat,
        horizon_slots=slots,
        seed=seed,
        mode=mode,
        sleep=tuple(sorted(sleep, key=lambda s: (s.validator, s.start))),
        corruptions=corruptions,
        attack=attack,
        txs=txs,
    )
