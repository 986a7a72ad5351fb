"""Checker suite: turns the protocol's guarantees into pass/fail verdicts
computed from a trace alone.

Every checker takes a TraceIndex (a parsed, indexed trace) and produces a
CheckerVerdict; failures carry a witness that re-verifies against the trace.
Checkers that do not apply to a given run (no finality fields in mode A, no
attack declared, not a differential trace) pass vacuously and say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .blocks import GENESIS, BlockStore, Block
from .finality import (
    attribute_conflicting_finality,
    conflicting_finalized,
    detect_slashable,
    implicated_validators,
    supermajority,
)
from .messages import Checkpoint, FinVote, VoteMsg
from .simnet import ProposerSchedule
from .trace import Trace, expand_delivery
from .validator import fastconfirm_round, propose_round, vote_round
from .views import View

UNREACHABLE = 1 << 60


@dataclass
class CheckerVerdict:
    checker: str
    passed: bool
    witness: dict | None = None
    info: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {"type": "verdict", "checker": self.checker, "pass": self.passed}
        if self.witness is not None:
            rec["witness"] = self.witness
        if self.info:
            rec["info"] = self.info
        return rec


def _cp_from(d: dict | None) -> Checkpoint | None:
    if d is None:
        return None
    return Checkpoint(bytes.fromhex(d["chain"]), d["c"])


def _fin_from(d: dict | None) -> FinVote | None:
    if d is None:
        return None
    return FinVote(_cp_from(d["source"]), _cp_from(d["target"]), d["voter"])


class TraceIndex:
    """Parsed single-run trace with per-validator activity arrays and the
    rebuilt block registry."""

    def __init__(self, header: dict, records: list[dict]):
        self.header = header
        sc = header["scenario"]
        self.scenario = sc
        self.n = sc["n"]
        self.delta = sc["delta"]
        self.kappa = sc["kappa"]
        self.gst = sc["gst"]
        self.gat = sc["gat"]
        self.horizon = 4 * sc["delta"] * sc["horizon_slots"]
        self.slots = sc["horizon_slots"]
        self.t_after = sc.get("t_after", 0)
        self.mode = header.get("mode", "B")
        self.attack = sc.get("attack")

        self.registry = BlockStore()
        self.proposer: dict[int, int] = {}
        self.votes: list[dict] = []
        self.proposes: list[dict] = []
        self.vote_states: dict[int, list[dict]] = {}
        self.fc_states: dict[int, list[dict]] = {}
        self.participation: dict[int, dict] = {}
        self.txs: list[tuple[int, bytes]] = []
        self.delivery: dict[str, dict[int, int]] = {}
        self.compliance: dict | None = None
        self.summary: dict | None = None
        self.corrupted_at: dict[int, int] = {}
        events: dict[int, list[dict]] = {v: [] for v in range(self.n)}

        for rec in records:
            kind = rec.get("type")
            if kind == "block":
                if rec["parent"] is None:
                    continue  # genesis is pre-inserted
                self.registry.insert(
                    Block(
                        id=bytes.fromhex(rec["id"]),
                        parent=bytes.fromhex(rec["parent"]),
                        slot=rec["slot"],
                        body=tuple(bytes.fromhex(h) for h in rec["body"]),
                    )
                )
            elif kind == "proposer":
                self.proposer[rec["slot"]] = rec["validator"]
            elif kind == "vote":
                self.votes.append(rec)
            elif kind == "propose":
                self.proposes.append(rec)
            elif kind == "vote_state":
                self.vote_states.setdefault(rec["validator"], []).append(rec)
            elif kind == "fastconfirm_state":
                self.fc_states.setdefault(rec["validator"], []).append(rec)
            elif kind == "participation":
                self.participation[rec["slot"]] = rec
            elif kind == "tx":
                self.txs.extend((rec["round"], bytes.fromhex(h)) for h in rec["ids"])
            elif kind == "delivery":
                self.delivery[rec["key"]] = expand_delivery(
                    rec["rounds"], list(range(self.n))
                )
            elif kind == "compliance":
                self.compliance = rec
            elif kind == "summary":
                self.summary = rec
            elif kind == "activity":
                events[rec["validator"]].append(rec)
                if rec["event"] == "corrupt":
                    self.corrupted_at.setdefault(rec["validator"], rec["round"])

        # per-round awake/active arrays from the activity transitions
        self._awake = [[False] * self.horizon for _ in range(self.n)]
        self._active = [[False] * self.horizon for _ in range(self.n)]
        for v in range(self.n):
            awake = False
            active_from = UNREACHABLE
            evs = {e["round"]: e for e in events[v] if e["event"] in ("wake", "sleep")}
            corrupt_r = self.corrupted_at.get(v, UNREACHABLE)
            for r in range(self.horizon):
                ev = evs.get(r)
                if ev is not None:
                    awake = ev["event"] == "wake"
                    if awake:
                        active_from = ev.get("active_from", r)
                if r >= corrupt_r:
                    self._awake[v][r] = True
                    continue
                self._awake[v][r] = awake
                self._active[v][r] = awake and r >= active_from

        # chain_ava / chain_fin timelines: (round, tip) change points
        self.ava_timeline: dict[int, list[tuple[int, bytes]]] = {}
        self.fin_timeline: dict[int, list[tuple[int, bytes]]] = {}
        for v in range(self.n):
            snaps = sorted(
                self.vote_states.get(v, []) + self.fc_states.get(v, []),
                key=lambda rec: rec["round"],
            )
            ava = [(0, GENESIS.id)]
            fin = [(0, GENESIS.id)]
            for rec in snaps:
                ava.append((rec["round"], bytes.fromhex(rec["chain_ava"])))
                if rec.get("chain_fin") is not None:
                    fin.append((rec["round"], bytes.fromhex(rec["chain_fin"])))
            self.ava_timeline[v] = ava
            self.fin_timeline[v] = fin

        self._vote_msgs: dict[str, VoteMsg] | None = None

    # -- helpers -----------------------------------------------------------

    def honest_at(self, v: int, r: int) -> bool:
        return self.corrupted_at.get(v, UNREACHABLE) > r

    def awake_at(self, v: int, r: int) -> bool:
        return self._awake[v][r]

    def active_at(self, v: int, r: int) -> bool:
        return self._active[v][r]

    def active_in(self, v: int, lo: int, hi: int) -> bool:
        lo = max(lo, 0)
        hi = min(hi, self.horizon)
        return any(self._active[v][lo:hi])

    def chain_at(self, timeline: list[tuple[int, bytes]], r: int) -> bytes:
        tip = timeline[0][1]
        for rr, t in timeline:
            if rr > r:
                break
            tip = t
        return tip

    def honest_proposals(self) -> list[dict]:
        return [
            rec
            for rec in self.proposes
            if not rec.get("adversarial") and self.honest_at(rec["validator"], rec["round"])
        ]

    def vote_msgs(self) -> dict[str, VoteMsg]:
        """Message key (hex) -> reconstructed VoteMsg, covering standalone
        votes and votes embedded in proposal quorum certificates."""
        if self._vote_msgs is not None:
            return self._vote_msgs
        out: dict[str, VoteMsg] = {}
        for rec in self.votes:
            msg = VoteMsg(
                bytes.fromhex(rec["chain"]), _fin_from(rec["fin"]), rec["slot"], rec["validator"]
            )
            out[msg.key.hex()] = msg
        for rec in self.proposes:
            for q in rec["qc"]:
                msg = VoteMsg(
                    bytes.fromhex(q["chain"]), _fin_from(q["fin"]), q["slot"], q["voter"]
                )
                out.setdefault(msg.key.hex(), msg)
        self._vote_msgs = out
        return out

    def ingestion_round(self, v: int, key_hex: str) -> int | None:
        d = self.delivery.get(key_hex, {}).get(v)
        if d is None:
            return None
        r = d
        while r < self.horizon and not self.awake_at(v, r):
            r += 1
        return r if r < self.horizon else None

    def final_view(self, v: int) -> View:
        """The validator's end-of-run view (votes only), rebuilt from
        deliveries, wake intervals and message records."""
        view = View(self.registry)
        for key_hex, msg in self.vote_msgs().items():
            r = self.ingestion_round(v, key_hex)
            if r is not None:
                view.add_vote(msg, r)
        return view


def _index_of(trace: Trace, run: str | None = None) -> TraceIndex:
    if run is None:
        records = trace.records
    else:
        records = [r for r in trace.records if r.get("run") == run]
    return TraceIndex(trace.header, records)


# -- generic prefix-compatibility scan ---------------------------------------


def _prefix_violation(registry: BlockStore, tagged_tips: Iterable[tuple[bytes, dict]]):
    """Tips must be pairwise prefix-comparable.  Returns (meta_a, meta_b) for
    the first incompatible pair, else None."""
    by_tip: dict[bytes, dict] = {}
    for tip, meta in tagged_tips:
        by_tip.setdefault(tip, meta)
    tips = sorted(by_tip, key=lambda b: (registry.slot_of(b), b))
    for i in range(len(tips) - 1):
        a, b = tips[i], tips[i + 1]
        if registry.slot_of(a) == registry.slot_of(b) and a != b:
            return by_tip[a], by_tip[b]
        if not registry.is_prefix(a, b):
            return by_tip[a], by_tip[b]
    return None


def _na(name: str, reason: str) -> CheckerVerdict:
    return CheckerVerdict(name, True, info={"applicable": False, "reason": reason})


# -- checkers -----------------------------------------------------------------


def safety_check(idx: TraceIndex) -> CheckerVerdict:
    """No two honest available-chain outputs at rounds >= t_after conflict."""
    tips = []
    for v, timeline in idx.ava_timeline.items():
        for r, tip in timeline:
            if r >= idx.t_after and idx.honest_at(v, r):
                tips.append((tip, {"validator": v, "round": r, "chain": tip.hex()}))
    bad = _prefix_violation(idx.registry, tips)
    if bad:
        return CheckerVerdict("safety_check", False, witness={"a": bad[0], "b": bad[1]})
    return CheckerVerdict("safety_check", True, info={"outputs": len(tips)})


def liveness_check(idx: TraceIndex, t_conf: int | None = None) -> CheckerVerdict:
    """Every injected transaction is in every active validator's confirmed
    chain within 8*kappa*delta + delta rounds of its injection."""
    if t_conf is None:
        t_conf = 8 * idx.kappa * idx.delta + idx.delta
    if not idx.txs:
        return _na("liveness_check", "no transactions injected")
    checked = 0
    for inj_round, tx in idx.txs:
        deadline = max(inj_round, idx.t_after) + t_conf
        if deadline >= idx.horizon:
            continue
        for v in range(idx.n):
            timeline = idx.ava_timeline[v]
            for k, (r, tip) in enumerate(timeline):
                hi = timeline[k + 1][0] if k + 1 < len(timeline) else idx.horizon
                lo = max(r, deadline)
                if lo >= hi or not idx.active_in(v, lo, hi):
                    continue
                checked += 1
                if tx not in idx.registry.chain_txs(tip):
                    return CheckerVerdict(
                        "liveness_check",
                        False,
                        witness={
                            "tx": tx.hex(),
                            "validator": v,
                            "round": lo,
                            "chain": tip.hex(),
                            "deadline": deadline,
                        },
                        info={"t_conf": t_conf},
                    )
    if checked == 0:
        return _na("liveness_check", "no confirmation deadline inside the horizon")
    return CheckerVerdict("liveness_check", True, info={"t_conf": t_conf, "checked": checked})


def reorg_resilience_check(idx: TraceIndex) -> CheckerVerdict:
    """Chains proposed by honest-at-propose-time proposers never conflict
    with any honest confirmed output at any round."""
    outputs: dict[bytes, dict] = {}
    for v, timeline in idx.ava_timeline.items():
        for r, tip in timeline:
            if idx.honest_at(v, r):
                outputs.setdefault(tip, {"validator": v, "round": r})
    for rec in idx.honest_proposals():
        chain_p = bytes.fromhex(rec["chain_p"])
        for tip, meta in outputs.items():
            if idx.registry.conflicts(chain_p, tip):
                return CheckerVerdict(
                    "reorg_resilience_check",
                    False,
                    witness={
                        "proposal_slot": rec["slot"],
                        "proposer": rec["validator"],
                        "chain_p": rec["chain_p"],
                        "conflicting_output": dict(meta, chain=tip.hex()),
                    },
                )
    return CheckerVerdict(
        "reorg_resilience_check", True, info={"proposals": len(idx.honest_proposals())}
    )


def prefix_check(idx: TraceIndex) -> CheckerVerdict:
    """chain_fin is a prefix of chain_ava at every snapshot of every honest
    validator (full protocol only)."""
    if idx.mode != "B":
        return _na("prefix_check", "no finalized chain in this mode")
    for v in range(idx.n):
        snaps = sorted(
            idx.vote_states.get(v, []) + idx.fc_states.get(v, []),
            key=lambda rec: rec["round"],
        )
        for rec in snaps:
            if rec.get("chain_fin") is None or not idx.honest_at(v, rec["round"]):
                continue
            fin = bytes.fromhex(rec["chain_fin"])
            ava = bytes.fromhex(rec["chain_ava"])
            if not idx.registry.is_prefix(fin, ava):
                return CheckerVerdict(
                    "prefix_check",
                    False,
                    witness={"validator": v, "round": rec["round"],
                             "chain_fin": rec["chain_fin"], "chain_ava": rec["chain_ava"]},
                )
    return CheckerVerdict("prefix_check", True)


def fin_monotonicity_check(idx: TraceIndex) -> CheckerVerdict:
    """Each honest validator's finalized chain only ever grows."""
    if idx.mode != "B":
        return _na("fin_monotonicity_check", "no finalized chain in this mode")
    for v, timeline in idx.fin_timeline.items():
        prev_r, prev = timeline[0]
        for r, tip in timeline[1:]:
            if not idx.honest_at(v, r):
                break
            if not idx.registry.is_prefix(prev, tip):
                return CheckerVerdict(
                    "fin_monotonicity_check",
                    False,
                    witness={"validator": v, "round": r,
                             "before": prev.hex(), "after": tip.hex()},
                )
            prev_r, prev = r, tip
    return CheckerVerdict("fin_monotonicity_check", True)


def fin_safety_check(idx: TraceIndex) -> CheckerVerdict:
    """All finalized chains observed across honest views are prefix-compatible."""
    if idx.mode != "B":
        return _na("fin_safety_check", "no finalized chain in this mode")
    tips = []
    for v, timeline in idx.fin_timeline.items():
        for r, tip in timeline:
            if idx.honest_at(v, r):
                tips.append((tip, {"validator": v, "round": r, "chain": tip.hex()}))
    for v, snaps in idx.fc_states.items():
        for rec in snaps:
            gf = rec.get("gf")
            if gf is not None and idx.honest_at(v, rec["round"]):
                tips.append(
                    (bytes.fromhex(gf["chain"]),
                     {"validator": v, "round": rec["round"], "chain": gf["chain"]})
                )
    bad = _prefix_violation(idx.registry, tips)
    if bad:
        return CheckerVerdict("fin_safety_check", False, witness={"a": bad[0], "b": bad[1]})
    return CheckerVerdict("fin_safety_check", True)


def never_slashed_check(idx: TraceIndex) -> CheckerVerdict:
    """No pair of fin-votes sent by honest validators is slashable."""
    if idx.mode != "B":
        return _na("never_slashed_check", "no fin-votes in this mode")
    finvotes = []
    for rec in idx.votes:
        if rec["fin"] is None:
            continue
        if idx.honest_at(rec["validator"], rec["round"]):
            finvotes.append(_fin_from(rec["fin"]))
    evidence = detect_slashable(finvotes)
    if evidence:
        ev = sorted(evidence, key=lambda e: e.voter)[0]
        return CheckerVerdict(
            "never_slashed_check",
            False,
            witness={"voter": ev.voter, "kind": ev.kind},
        )
    return CheckerVerdict("never_slashed_check", True, info={"fin_votes": len(finvotes)})


def accountability_check(idx: TraceIndex) -> CheckerVerdict:
    """On double-finalization attack runs: attribution implicates at least
    ceil(n/3) validators, all scripted colluders, no honest validator."""
    if not idx.attack or idx.attack.get("name") != "double_finalization":
        return _na("accountability_check", "no conflicting-finality attack declared")
    views = {
        v: idx.final_view(v)
        for v in range(idx.n)
        if v not in idx.corrupted_at
    }
    pair = None
    ids = sorted(views)
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if conflicting_finalized(idx.registry, views[ids[i]], views[ids[j]], idx.n):
                pair = (ids[i], ids[j])
                break
        if pair:
            break
    if pair is None:
        return CheckerVerdict(
            "accountability_check",
            False,
            witness={"reason": "no conflicting finalized checkpoints across honest views"},
        )
    evidence = attribute_conflicting_finality(
        idx.registry, views[pair[0]], views[pair[1]], idx.n
    )
    implicated = implicated_validators(evidence)
    colluders = set(idx.corrupted_at)
    need = -(-idx.n // 3)
    ok = len(implicated) >= need and implicated <= colluders
    witness = None
    if not ok:
        witness = {
            "implicated": sorted(implicated),
            "colluders": sorted(colluders),
            "required": need,
        }
    from .messages import encode_finvote

    evidence_records = sorted(
        (
            {
                "voter": e.voter,
                "kind": e.kind,
                "vote_a": encode_finvote(e.vote_a).hex(),
                "vote_b": encode_finvote(e.vote_b).hex(),
            }
            for e in evidence
        ),
        key=lambda d: (d["voter"], d["kind"], d["vote_a"], d["vote_b"]),
    )
    return CheckerVerdict(
        "accountability_check",
        ok,
        witness=witness,
        info={
            "implicated": sorted(implicated),
            "views": list(pair),
            "required": need,
            "evidence": evidence_records,
        },
    )


def fast_finality_check(idx: TraceIndex) -> CheckerVerdict:
    """With honest proposers in consecutive post-(GST,GAT)+4D slots and full
    honest participation, the first proposal is finalized by the fast-confirm
    round three slots later."""
    if idx.mode != "B":
        return _na("fast_finality_check", "no finalized chain in this mode")
    t_lo = max(idx.gst, idx.gat) + 4 * idx.delta
    props = {rec["slot"]: rec for rec in idx.honest_proposals()}
    checked = 0
    for t in range(idx.slots):
        if propose_round(t, idx.delta) < t_lo:
            continue
        deadline = fastconfirm_round(t + 3, idx.delta)
        if deadline >= idx.horizon:
            continue
        if t not in props or t + 1 not in props:
            continue
        if idx.corrupted_at:
            continue
        full = all(
            len(idx.participation.get(u, {}).get("active", ())) == idx.n
            for u in range(t, t + 4)
        )
        if not full:
            continue
        chain_p = bytes.fromhex(props[t]["chain_p"])
        checked += 1
        for v in range(idx.n):
            if not idx.active_at(v, deadline):
                continue
            fin = idx.chain_at(idx.fin_timeline[v], deadline)
            if not idx.registry.is_prefix(chain_p, fin):
                return CheckerVerdict(
                    "fast_finality_check",
                    False,
                    witness={"slot": t, "validator": v, "deadline": deadline,
                             "chain_fin": fin.hex(), "chain_p": props[t]["chain_p"]},
                )
    if checked == 0:
        return _na("fast_finality_check", "no qualifying consecutive honest slots")
    return CheckerVerdict("fast_finality_check", True, info={"slots_checked": checked})


def fast_confirm_check(idx: TraceIndex) -> CheckerVerdict:
    """Two-thirds active participation plus an honest proposal implies every
    active validator fast-confirms it within the same slot."""
    thr = supermajority(idx.n)
    props = {rec["slot"]: rec for rec in idx.honest_proposals()}
    checked = 0
    for t, rec in sorted(props.items()):
        if propose_round(t, idx.delta) < idx.gst:
            continue  # the guarantee needs delta-bounded delivery from propose on
        active = idx.participation.get(t, {}).get("active", ())
        if len(active) < thr:
            continue
        r = fastconfirm_round(t, idx.delta)
        if r >= idx.horizon:
            continue
        chain_p = bytes.fromhex(rec["chain_p"])
        checked += 1
        for v in range(idx.n):
            if not idx.active_at(v, r):
                continue
            ava = idx.chain_at(idx.ava_timeline[v], r)
            if not idx.registry.is_prefix(chain_p, ava):
                return CheckerVerdict(
                    "fast_confirm_check",
                    False,
                    witness={"slot": t, "validator": v, "round": r,
                             "chain_ava": ava.hex(), "chain_p": rec["chain_p"]},
                )
    if checked == 0:
        return _na("fast_confirm_check", "no slot with quorum participation and honest proposal")
    return CheckerVerdict("fast_confirm_check", True, info={"slots_checked": checked})


def _vote_triplets(qc: list[dict]) -> frozenset:
    return frozenset((q["chain"], q["slot"], q["voter"]) for q in qc)


def equivalence_check(trace: Trace) -> CheckerVerdict:
    """Differential runs: per-slot fork-choice outputs coincide and emitted
    messages are pairwise equal up to their finality-related components."""
    if trace.header.get("mode") != "differential":
        return _na("equivalence_check", "not a differential trace")
    a, b = _index_of(trace, "A"), _index_of(trace, "B")

    def states(idx):
        out = {}
        for v, recs in idx.vote_states.items():
            for rec in recs:
                out[(rec["slot"], v)] = rec
        return out

    sa, sb = states(a), states(b)
    if set(sa) != set(sb):
        only = sorted(set(sa) ^ set(sb))[:3]
        return CheckerVerdict(
            "equivalence_check", False, witness={"unpaired_vote_states": [list(x) for x in only]}
        )
    for key in sorted(sa):
        ra, rb = sa[key], sb[key]
        if ra["emitted"] != rb["emitted"]:
            return CheckerVerdict(
                "equivalence_check", False,
                witness={"slot": key[0], "validator": key[1],
                         "emitted_a": ra["emitted"], "emitted_b": rb["emitted"]},
            )
        if not ra["emitted"]:
            # joining validators send nothing; the per-slot fork-choice
            # agreement is only claimed for active validators (a stale frozen
            # view plus mode-specific fallback bases can legitimately differ)
            continue
        if ra["mfc"] != rb["mfc"]:
            return CheckerVerdict(
                "equivalence_check", False,
                witness={"slot": key[0], "validator": key[1],
                         "mfc_a": ra["mfc"], "mfc_b": rb["mfc"]},
            )
        if ra["vote_chain"] != rb["vote_chain"]:
            return CheckerVerdict(
                "equivalence_check", False,
                witness={"slot": key[0], "validator": key[1],
                         "vote_a": ra["vote_chain"], "vote_b": rb["vote_chain"]},
            )
    pa = {rec["slot"]: rec for rec in a.proposes}
    pb = {rec["slot"]: rec for rec in b.proposes}
    if set(pa) != set(pb):
        return CheckerVerdict(
            "equivalence_check", False,
            witness={"unpaired_proposals": sorted(set(pa) ^ set(pb))[:3]},
        )
    for t in sorted(pa):
        ra, rb = pa[t], pb[t]
        same = (
            ra["chain_p"] == rb["chain_p"]
            and ra["validator"] == rb["validator"]
            and ra["mfc"] == rb["mfc"]
            and bool(ra["qc"]) == bool(rb["qc"])
        )
        # an empty certificate anchors chain_c at the mode's fallback chain,
        # which is finality-related; with a certificate the content must match
        if same and ra["qc"]:
            same = ra["chain_c"] == rb["chain_c"] and _vote_triplets(
                ra["qc"]
            ) == _vote_triplets(rb["qc"])
        if not same:
            return CheckerVerdict(
                "equivalence_check", False,
                witness={"slot": t, "proposal_a": ra["key"], "proposal_b": rb["key"]},
            )
    return CheckerVerdict(
        "equivalence_check", True, info={"vote_states": len(sa), "proposals": len(pa)}
    )


def consecutive_honest_proposer_stat(idx: TraceIndex) -> CheckerVerdict:
    """Advisory: empirical frequency of a consecutive honest-proposer pair
    within kappa slots against the 1-(1-p^2)^floor(kappa/2) lower bound.
    Warns (never fails) when the sample dips 3 sigma below the bound."""
    n = idx.n
    honest = [v for v in range(n) if v not in idx.corrupted_at]
    p = len(honest) / n
    kappa = idx.kappa
    seeds = 200
    hits = 0
    hs = set(honest)
    for i in range(seeds):
        sched = ProposerSchedule(n, idx.scenario["seed"] * 1_000_003 + i)
        ps = [sched.proposer(t) for t in range(kappa)]
        if any(ps[j] in hs and ps[j + 1] in hs for j in range(kappa - 1)):
            hits += 1
    freq = hits / seeds
    bound = 1.0 - (1.0 - p * p) ** (kappa // 2)
    sigma = math.sqrt(max(bound * (1.0 - bound), 1e-12) / seeds)
    warn = freq < bound - 3 * sigma
    return CheckerVerdict(
        "consecutive_honest_proposer_stat",
        True,
        info={
            "advisory": True,
            "freq": freq,
            "bound": bound,
            "sigma": sigma,
            "warn": warn,
        },
    )


def check_compliance(trace: Trace) -> dict:
    """Recompute the sleepiness-constraint report from the trace's
    participation and activity records (independent of the report the
    simulator wrote)."""
    idx = trace if isinstance(trace, TraceIndex) else _index_of(trace)
    per_slot: dict[str, bool] = {}
    ok_all = True
    for t in range(1, idx.slots):
        if propose_round(t, idx.delta) < idx.gst:
            continue
        h_prev = set(idx.participation.get(t - 1, {}).get("active", ()))
        vr = vote_round(t, idx.delta)
        adv = {v for v, cr in idx.corrupted_at.items() if cr <= vr}
        ok = len(h_prev - adv) > len(adv)
        per_slot[str(t)] = ok
        ok_all = ok_all and ok
    f = len(idx.corrupted_at)
    return {
        "type": "compliance",
        "per_slot": per_slot,
        "compliant": ok_all,
        "f": f,
        "f_lt_n3": 3 * f < idx.n,
    }


CHECKERS = {
    "safety_check": safety_check,
    "liveness_check": liveness_check,
    "reorg_resilience_check": reorg_resilience_check,
    "prefix_check": prefix_check,
    "fin_monotonicity_check": fin_monotonicity_check,
    "fin_safety_check": fin_safety_check,
    "never_slashed_check": never_slashed_check,
    "accountability_check": accountability_check,
    "fast_finality_check": fast_finality_check,
    "fast_confirm_check": fast_confirm_check,
    "equivalence_check": equivalence_check,
    "consecutive_honest_proposer_stat": consecutive_honest_proposer_stat,
}


def run_checks(trace: Trace, names: list[str] | None = None) -> list[CheckerVerdict]:
    if names is None or names == ["all"]:
        names = list(CHECKERS)
    unknown = [nm for nm in names if nm not in CHECKERS]
    if unknown:
        raise KeyError(f"unknown checkers: {unknown}; known: {sorted(CHECKERS)}")
    differential = trace.header.get("mode") == "differential"
    idx = None if differential else _index_of(trace)
    out = []
    for nm in names:
        fn = CHECKERS[nm]
        if nm == "equivalence_check":
            out.append(fn(trace))
        elif differential:
            out.append(_na(nm, "differential trace; run single-mode for this checker"))
        else:
            out.append(fn(idx))
    return out
