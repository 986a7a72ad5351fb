"""Deterministic round-driven world: gossip network, sleep/corruption
schedules, proposer election, transaction pool and compliance checking.

Round semantics: all deliveries due at round r are ingested before any
handler at r runs; everything emitted at r becomes deliverable from r+1.
Honest-to-honest messages are delivered by max(send, GST) + delta at the
latest; before GST the adversary may reorder within that bound (the default
is the bound itself).  Any message received by an honest validator is
re-gossiped so selective sends cannot stay selective for more than delta
rounds after GST; proposals are only forwarded during the first delta rounds
of their slot.  Iteration everywhere is in sorted order so that identical
scenarios produce byte-identical traces.
"""

from __future__ import annotations

import hashlib
import logging
from typing import Iterable

from . import __version__
from .blocks import Block, BlockStore, GENESIS
from .messages import ProposeMsg, VoteMsg
from .scenario import Scenario
from .trace import Trace, b2h, compact_delivery
from .validator import (
    MODE_A,
    MODE_B,
    PHASE_FASTCONFIRM,
    PHASE_MERGE,
    PHASE_PROPOSE,
    PHASE_VOTE,
    Validator,
    activation_round,
    phase_at,
    vote_round,
)

log = logging.getLogger("ebbflow.simnet")

UNREACHABLE = 1 << 60


class ScriptError(RuntimeError):
    """An adversary script acted through an uncorrupted validator or broke a
    scheduling rule."""


class ProposerSchedule:
    """One proposer per slot: explicit override or a seeded PRF, uniform over
    the validator set.  The identity is treated as revealed only once the
    slot's propose round is reached (the trace records it there)."""

    def __init__(self, n: int, seed: int, overrides: dict[int, int] | None = None):
        self.n = n
        self.seed = seed
        self.overrides = dict(overrides or {})

    def proposer(self, slot: int) -> int:
        if slot in self.overrides:
            return self.overrides[slot]
        digest = hashlib.sha256(
            b"proposer:"
            + self.seed.to_bytes(8, "little", signed=True)
            + slot.to_bytes(8, "little", signed=True)
        ).digest()
        return int.from_bytes(digest[:8], "big") % self.n


class NullScript:
    """Default adversary: corrupted validators fall silent (withholding),
    delivery follows the worst-case bound."""

    name = "null"

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = params or {}
        self.seed = seed

    def bind(self, world: "World") -> None:
        self.world = world

    def on_corrupt(self, vid: int, validator: Validator) -> None:
        pass

    def delivery_override(self, msg, sender: int, recipient: int, rnd: int) -> int | None:
        return None

    def on_round(self, world: "World", rnd: int) -> None:
        pass


class World:
    def __init__(self, scenario: Scenario, mode: str | None = None, script=None):
        scenario.validate()
        self.sc = scenario
        self.mode = mode or scenario.mode
        if self.mode not in (MODE_A, MODE_B):
            raise ValueError(f"world runs a single mode, got {self.mode!r}")
        self.n = scenario.n
        self.delta = scenario.delta
        self.gst = scenario.gst
        self.gat = scenario.gat
        self.horizon = scenario.horizon_rounds
        self.schedule = ProposerSchedule(self.n, scenario.seed, scenario.proposer_overrides)
        self.registry = BlockStore()
        self.validators = [
            Validator(v, self.n, self.delta, scenario.kappa, self.mode, self.schedule.proposer)
            for v in range(self.n)
        ]
        if script is None:
            from .attacks import make_script

            script = make_script(scenario.attack, scenario.seed)
        self.script = script
        self.script.bind(self)

        self._sleep: dict[int, list[tuple[int, int]]] = {}
        for iv in scenario.sleep:
            self._sleep.setdefault(iv.validator, []).append((iv.start, iv.end))
        self._corrupt_events: dict[int, list[int]] = {}
        for c in scenario.corruptions:
            self._corrupt_events.setdefault(c.round, []).append(c.validator)
        self.corrupt_round: dict[int, int] = {}
        self.active_from = [0] * self.n
        self._awake_prev = [False] * self.n

        # round -> [(recipient, key)] in schedule order; asleep recipients'
        # entries move to a per-validator backlog drained on wake
        self._agenda: dict[int, list[tuple[int, bytes]]] = {}
        self._backlog: list[list[bytes]] = [[] for _ in range(self.n)]
        self.msg_objs: dict[bytes, VoteMsg | ProposeMsg] = {}
        self.delivery: dict[bytes, dict[int, int]] = {}
        self._msg_order: list[bytes] = []
        self._regossiped: set[bytes] = set()

        self.txpool: list[bytes] = []
        self._tx_by_round: dict[int, list[bytes]] = {}
        for inj in scenario.txs:
            self._tx_by_round.setdefault(inj.round, []).extend(inj.ids)

        self.records: list[dict] = []
        self.participation: dict[int, list[int]] = {}
        self.last_emissions: list[tuple[int, VoteMsg | ProposeMsg]] = []
        self.sent = 0
        self.ingested = 0
        self._register_block_record(GENESIS)

    # -- activity ----------------------------------------------------------

    def corrupted_at(self, v: int, r: int) -> bool:
        return self.corrupt_round.get(v, UNREACHABLE) <= r

    def honest_at(self, v: int, r: int) -> bool:
        return not self.corrupted_at(v, r)

    def awake_at(self, v: int, r: int) -> bool:
        if self.corrupted_at(v, r):
            return True  # adversarial validators are always awake
        if r >= self.gat:
            return True  # after GAT everyone stays awake
        return not any(start <= r < end for start, end in self._sleep.get(v, ()))

    def active_at(self, v: int, r: int) -> bool:
        return self.honest_at(v, r) and self.awake_at(v, r) and r >= self.active_from[v]

    # -- pre-run schedule mutators (programmatic scenario construction) ------

    def corrupt(self, v: int, rnd: int) -> None:
        if not 0 <= v < self.n:
            raise ScriptError(f"unknown validator {v}")
        self._corrupt_events.setdefault(rnd, []).append(v)

    def set_sleep(self, v: int, start: int, end: int) -> None:
        if not 0 <= v < self.n or end <= start:
            raise ScriptError(f"bad sleep interval for {v}: [{start}, {end})")
        self._sleep.setdefault(v, []).append((start, end))

    def inject_txs(self, rnd: int, ids: Iterable[bytes]) -> None:
        self._tx_by_round.setdefault(rnd, []).extend(ids)

    # -- blocks and messages -------------------------------------------------

    def _register_block_record(self, block: Block) -> None:
        self.records.append(
            {
                "type": "block",
                "id": b2h(block.id),
                "parent": b2h(block.parent),
                "slot": block.slot,
                "body": [tx.hex() for tx in block.body],
            }
        )

    def register_block(self, block: Block) -> None:
        from .blocks import ACCEPTED

        if self.registry.insert(block) == ACCEPTED:
            self._register_block_record(block)

    def mint_block(self, parent: bytes, slot: int, body: Iterable[bytes]) -> Block:
        """Adversary-built block, registered globally so deliveries resolve."""
        from .blocks import make_block

        block = make_block(parent, slot, tuple(body))
        self.register_block(block)
        return block

    def _referenced_tips(self, msg) -> list[bytes]:
        if isinstance(msg, VoteMsg):
            tips = [msg.chain]
            if msg.fin is not None:
                tips += [msg.fin.source.chain, msg.fin.target.chain]
            return tips
        tips = [msg.chain_p, msg.chain_c]
        if msg.gj is not None:
            tips.append(msg.gj.chain)
        for q in msg.qc:
            tips.append(q.chain)
            if q.fin is not None:
                tips += [q.fin.source.chain, q.fin.target.chain]
        return tips

    def _pull_chain(self, store: BlockStore, tip: bytes) -> bool:
        if tip in store:
            return True
        if tip not in self.registry:
            return False
        path = []
        cur = tip
        while cur not in store:
            path.append(cur)
            cur = self.registry.get(cur).parent
        for bid in reversed(path):
            store.insert(self.registry.get(bid))
        return True

    def _ensure_blocks(self, store: BlockStore, msg) -> bool:
        """Deliver the referenced blocks (ancestor closure) alongside the
        message; False when a tip cannot be resolved from the registry."""
        if isinstance(msg, VoteMsg):
            if not self._pull_chain(store, msg.chain):
                return False
            fin = msg.fin
            if fin is None:
                return True
            return self._pull_chain(store, fin.source.chain) and self._pull_chain(
                store, fin.target.chain
            )
        for tip in self._referenced_tips(msg):
            if not self._pull_chain(store, tip):
                return False
        return True

    def _schedule(self, key: bytes, recipient: int, rnd: int) -> None:
        cur = self.delivery.setdefault(key, {}).get(recipient)
        if cur is not None and cur <= rnd:
            return
        self.delivery[key][recipient] = rnd
        self._agenda.setdefault(rnd, []).append((recipient, key))

    def _regossip(self, v: int, msg, rnd: int) -> None:
        """First honest receipt forwards the message to everyone, bounded by
        max(r, GST) + delta.  Votes and blocks always; proposals only during
        the first delta rounds of their slot."""
        if msg.key in self._regossiped:
            return
        self._regossiped.add(msg.key)
        if isinstance(msg, ProposeMsg) and rnd >= vote_round(msg.slot, self.delta):
            return
        bound = max(rnd, self.gst) + self.delta
        for u in range(self.n):
            if u == v:
                continue
            if self.delivery.get(msg.key, {}).get(u, UNREACHABLE) > bound:
                self._schedule(msg.key, u, bound)

    def _deliver(self, v: int, msg, rnd: int) -> None:
        val = self.validators[v]
        if msg.key in val.view:
            return  # duplicate delivery; set semantics
        if not self._ensure_blocks(val.store, msg):
            log.warning("dropping message with unresolvable blocks for %d", v)
            return
        honest = self.honest_at(v, rnd)
        if isinstance(msg, VoteMsg):
            val.receive_vote(msg, rnd)
        else:
            val.receive_proposal(msg, rnd)
            for q in msg.qc:
                # votes inside a proposal count as received and re-gossiped
                if q.key in val.view:
                    continue
                if q.key not in self.msg_objs:
                    self.msg_objs[q.key] = q
                    self._msg_order.append(q.key)
                    self.delivery.setdefault(q.key, {})
                val.receive_vote(q, rnd)
                self.delivery[q.key].setdefault(v, rnd)
                if honest:
                    self._regossip(v, q, rnd)
        self.ingested += 1
        if honest:
            self._regossip(v, msg, rnd)

    def send(
        self,
        sender: int,
        msg,
        rnd: int,
        recipients: dict[int, int] | None = None,
    ) -> dict[int, int]:
        """Broadcast a message.  `recipients` (adversarial sends only) maps
        validator -> delivery round; honest sends use the default bound,
        tightened per recipient by the script's pre-GST delivery control."""
        if msg.key not in self.msg_objs:
            self.msg_objs[msg.key] = msg
            self._msg_order.append(msg.key)
            self.delivery.setdefault(msg.key, {})
        self.delivery[msg.key][sender] = rnd
        self.sent += 1
        bound = max(rnd, self.gst) + self.delta
        out: dict[int, int] = {sender: rnd}
        at_bound = True
        for u in range(self.n):
            if u == sender:
                continue
            if recipients is not None:
                if u not in recipients:
                    at_bound = False
                    continue
                when = recipients[u]
                if when <= rnd:
                    raise ScriptError(f"delivery round {when} not after send round {rnd}")
                if when > bound:
                    at_bound = False
            else:
                override = self.script.delivery_override(msg, sender, u, rnd)
                when = bound if override is None else max(rnd + 1, min(override, bound))
            self._schedule(msg.key, u, when)
            out[u] = when
        if at_bound:
            # already broadcast at the delivery bound: re-gossip on receipt
            # can never tighten this schedule (max(r', gst) + delta >= bound
            # for any receipt round r' >= send round)
            self._regossiped.add(msg.key)
        self._deliver(sender, msg, rnd)
        return out

    def send_adversarial(self, sender: int, msg, rnd: int, recipients: dict[int, int]):
        if not self.corrupted_at(sender, rnd):
            raise ScriptError(f"validator {sender} is not corrupted at round {rnd}")
        # sender identity cannot be forged
        author = msg.voter if isinstance(msg, VoteMsg) else msg.proposer
        if author != sender:
            raise ScriptError(f"validator {sender} cannot forge a message from {author}")
        if isinstance(msg, ProposeMsg):
            for q in msg.qc:
                if q.key not in self.msg_objs and not self.corrupted_at(q.voter, rnd):
                    raise ScriptError(
                        f"qc embeds an unsent vote attributed to honest {q.voter}"
                    )
        deliveries = self.send(sender, msg, rnd, recipients=recipients)
        self._record_emission(msg, rnd, deliveries, adversarial=True)
        return deliveries

    # -- byzantine action helpers (used by scripts) ---------------------------

    def byz_equivocate_vote(self, v: int, t: int, chains: list[bytes], rnd: int,
                            fins=None, recipients: dict[int, int] | None = None):
        """Send one well-formed vote per chain in the same slot."""
        if not self.corrupted_at(v, rnd):
            raise ScriptError(f"validator {v} is not corrupted at round {rnd}")
        if recipients is None:
            recipients = {u: rnd + self.delta for u in range(self.n) if u != v}
        msgs = []
        for i, chain in enumerate(chains):
            fin = None if fins is None else fins[i]
            vote = VoteMsg(chain, fin, t, v)
            self.send_adversarial(v, vote, rnd, recipients)
            msgs.append(vote)
        return msgs

    def byz_double_finvote(self, v: int, links, chain: bytes, t: int, rnd: int,
                           recipients: dict[int, int] | None = None):
        """Send one chain-vote per (source, target) link: distinct fin-votes
        in one slot."""
        from .messages import FinVote

        fins = [FinVote(src, tgt, v) for src, tgt in links]
        return self.byz_equivocate_vote(
            v, t, [chain] * len(fins), rnd, fins=fins, recipients=recipients
        )

    def byz_withhold(self, v: int, rnd: int) -> None:
        """Withholding is the corrupted default: assert the right to do so."""
        if not self.corrupted_at(v, rnd):
            raise ScriptError(f"validator {v} is not corrupted at round {rnd}")

    def byz_replay(self, v: int, rnd: int, limit: int = 8):
        """Re-send the most recent messages seen; duplicates collapse in the
        recipients' views."""
        if not self.corrupted_at(v, rnd):
            raise ScriptError(f"validator {v} is not corrupted at round {rnd}")
        recipients = {u: rnd + self.delta for u in range(self.n) if u != v}
        for key in self._msg_order[-limit:]:
            msg = self.msg_objs[key]
            for u, when in recipients.items():
                self._schedule(key, u, when)
        return list(self._msg_order[-limit:])

    # -- trace records -------------------------------------------------------

    def _record_emission(self, msg, rnd: int, deliveries: dict[int, int],
                         adversarial: bool = False, extra: dict | None = None) -> None:
        if isinstance(msg, VoteMsg):
            rec = {
                "type": "vote",
                "round": rnd,
                "slot": msg.slot,
                "validator": msg.voter,
                "key": msg.key.hex(),
                "chain": b2h(msg.chain),
                "fin": _fin_dict(msg.fin),
            }
        else:
            rec = {
                "type": "propose",
                "round": rnd,
                "slot": msg.slot,
                "validator": msg.proposer,
                "key": msg.key.hex(),
                "chain_p": b2h(msg.chain_p),
                "chain_c": b2h(msg.chain_c),
                "gj": _cp_dict(msg.gj),
                "qc": [
                    {
                        "chain": b2h(q.chain),
                        "fin": _fin_dict(q.fin),
                        "slot": q.slot,
                        "voter": q.voter,
                    }
                    for q in msg.qc
                ],
            }
        if adversarial:
            rec["adversarial"] = True
        if extra:
            rec.update(extra)
        rec["delivery"] = compact_delivery(deliveries)
        self.records.append(rec)

    # -- main loop -----------------------------------------------------------

    def run(self) -> Trace:
        for r in range(self.horizon):
            self._round(r)
        self._finalize_records()
        header = {
            "type": "header",
            "format": 1,
            "package": f"ebbflow {__version__}",
            "hash_fn": "sha256",
            "mode": self.mode,
            "scenario": self.sc.to_dict(),
        }
        return Trace(header=header, records=self.records)

    def _round(self, r: int) -> None:
        # 1. transaction injection
        txs = self._tx_by_round.get(r)
        if txs:
            self.txpool.extend(txs)
            self.records.append(
                {"type": "tx", "round": r, "ids": [t.hex() for t in txs]}
            )

        # 2. corruption events
        for v in sorted(self._corrupt_events.get(r, ())):
            if v not in self.corrupt_round:
                self.corrupt_round[v] = r
                self.records.append(
                    {"type": "activity", "round": r, "validator": v, "event": "corrupt"}
                )
                self.script.on_corrupt(v, self.validators[v])

        # 3. sleep/wake transitions (joining protocol on wake)
        for v in range(self.n):
            awake = self.awake_at(v, r)
            if awake and not self._awake_prev[v]:
                self.active_from[v] = 0 if r == 0 else activation_round(r, self.delta)
                if self.corrupted_at(v, r):
                    self.active_from[v] = 0
                self.records.append(
                    {
                        "type": "activity",
                        "round": r,
                        "validator": v,
                        "event": "wake",
                        "active_from": self.active_from[v],
                    }
                )
            elif not awake and self._awake_prev[v]:
                self.records.append(
                    {"type": "activity", "round": r, "validator": v, "event": "sleep"}
                )
            self._awake_prev[v] = awake

        # 4. ingestion of due deliveries; waking validators drain their
        # queued backlog first ("receives all queued messages immediately")
        for v in range(self.n):
            backlog = self._backlog[v]
            if backlog and self.awake_at(v, r):
                for key in backlog:
                    self._deliver(v, self.msg_objs[key], r)
                backlog.clear()
        for v, key in self._agenda.pop(r, ()):
            if self.awake_at(v, r):
                self._deliver(v, self.msg_objs[key], r)
            else:
                self._backlog[v].append(key)

        # 5. phase handlers, honest awake validators in id order
        phase, t = phase_at(r, self.delta)
        emissions: list[tuple[int, VoteMsg | ProposeMsg, dict | None]] = []
        if phase == PHASE_PROPOSE:
            self.records.append(
                {"type": "proposer", "slot": t, "validator": self.schedule.proposer(t)}
            )
        if phase is not None:
            for v in range(self.n):
                if not self.honest_at(v, r) or not self.awake_at(v, r):
                    continue
                val = self.validators[v]
                if phase == PHASE_PROPOSE:
                    if self.schedule.proposer(t) == v and self.active_at(v, r):
                        msg, info = val.on_propose(t, list(self.txpool))
                        self.register_block(info["block"])
                        emissions.append((v, msg, {"mfc": b2h(info["mfc"])}))
                elif phase == PHASE_VOTE:
                    msg, info = val.on_vote(t)
                    emit = self.active_at(v, r)
                    self.records.append(
                        {
                            "type": "vote_state",
                            "round": r,
                            "slot": t,
                            "validator": v,
                            "mfc": b2h(info["mfc"]),
                            "chain_ava": b2h(val.chain_ava),
                            "chain_fin": b2h(val.chain_fin) if val.mode == MODE_B else None,
                            "chain_frozen": b2h(val.chain_frozen),
                            "gj_frozen": _cp_dict(val.gj_frozen) if val.mode == MODE_B else None,
                            "vote_chain": b2h(msg.chain),
                            "fin": _fin_dict(msg.fin),
                            "emitted": emit,
                        }
                    )
                    if emit:
                        emissions.append((v, msg, None))
                elif phase == PHASE_FASTCONFIRM:
                    from .finality import greatest_finalized, greatest_justified

                    info = val.on_fastconfirm(t)
                    rec = {
                        "type": "fastconfirm_state",
                        "round": r,
                        "slot": t,
                        "validator": v,
                        "cand": b2h(info["cand"]),
                        "chain_ava": b2h(val.chain_ava),
                        "chain_fin": b2h(val.chain_fin) if val.mode == MODE_B else None,
                    }
                    if val.mode == MODE_B:
                        rec["gj"] = _cp_dict(greatest_justified(val.view, self.n))
                        rec["gf"] = _cp_dict(greatest_finalized(val.view, self.n))
                    self.records.append(rec)
                elif phase == PHASE_MERGE:
                    val.on_merge(t, r)
                    self.records.append(
                        {
                            "type": "merge_state",
                            "round": r,
                            "slot": t,
                            "validator": v,
                            "chain_frozen": b2h(val.chain_frozen),
                            "gj_frozen": _cp_dict(val.gj_frozen) if val.mode == MODE_B else None,
                        }
                    )
            if phase == PHASE_VOTE:
                self.participation[t] = [v for v in range(self.n) if self.active_at(v, r)]
                self.records.append(
                    {
                        "type": "participation",
                        "slot": t,
                        "round": r,
                        "active": self.participation[t],
                        "adversarial": sorted(
                            v for v in range(self.n) if self.corrupted_at(v, r)
                        ),
                    }
                )

        self.last_emissions = [(v, msg) for v, msg, _ in emissions]
        for v, msg, extra in emissions:
            deliveries = self.send(v, msg, r)
            self._record_emission(msg, r, deliveries, extra=extra)

        # 6. adversary acts last within the round (rushing)
        self.script.on_round(self, r)

    def _finalize_records(self) -> None:
        undeliverable = 0
        for key in self._msg_order:
            dmap = self.delivery.get(key, {})
            undeliverable += sum(1 for rr in dmap.values() if rr >= self.horizon)
            self.records.append(
                {
                    "type": "delivery",
                    "key": key.hex(),
                    "rounds": compact_delivery(dmap),
                }
            )
        self.records.append(self.compliance_record())
        self.records.append(
            {
                "type": "summary",
                "messages_sent": self.sent,
                "ingestions": self.ingested,
                "blocks": len(self.registry),
                "undelivered_at_horizon": undeliverable,
            }
        )

    # -- compliance ------------------------------------------------------------

    def compliance_record(self) -> dict:
        per_slot: dict[str, bool] = {}
        ok_all = True
        slots = self.sc.horizon_slots
        for t in range(1, slots):
            if 4 * self.delta * t < self.gst:
                continue
            h_prev = set(self.participation.get(t - 1, ()))
            vr = vote_round(t, self.delta)
            adv = {v for v in range(self.n) if self.corrupted_at(v, vr)}
            ok = len(h_prev - adv) > len(adv)
            per_slot[str(t)] = ok
            ok_all = ok_all and ok
        f = len(self.corrupt_round)
        return {
            "type": "compliance",
            "per_slot": per_slot,
            "compliant": ok_all,
            "f": f,
            "f_lt_n3": 3 * f < self.n,
        }


def _cp_dict(cp) -> dict | None:
    if cp is None:
        return None
    return {"chain": cp.chain.hex(), "c": cp.c}


def _fin_dict(fin) -> dict | None:
    if fin is None:
        return None
    return {
        "source": _cp_dict(fin.source),
        "target": _cp_dict(fin.target),
        "voter": fin.voter,
    }
