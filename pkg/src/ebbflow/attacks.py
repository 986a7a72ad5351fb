"""Scripted adversaries and attack scenario builders.

Scripts run after the honest handlers of each round (a rushing adversary:
it may read the round's honest emissions and react within the same round)
and control pre-GST delivery where the model allows it.  Every adversarial
send goes through the world's byzantine helpers, which enforce that only
corrupted validators act.
"""

from __future__ import annotations

import random

from .blocks import GENESIS, make_tx
from .finality import greatest_justified
from .forkchoice import mfc
from .messages import Checkpoint, FinVote, ProposeMsg, VoteMsg
from .scenario import AttackSpec, Corruption, Scenario, TxInjection
from .simnet import NullScript, ScriptError
from .validator import (
    MODE_B,
    PHASE_PROPOSE,
    PHASE_VOTE,
    fastconfirm_gadget,
    fastconfirm_simple,
    phase_at,
)


class EquivocationScript(NullScript):
    """Corrupted validators vote for two fresh conflicting chains every slot
    (and equivocate their proposals when elected)."""

    name = "equivocation"

    def __init__(self, params=None, seed=0):
        super().__init__(params, seed)
        self.rng = random.Random(seed ^ 0xE901)

    def _corrupted(self, world, r):
        return sorted(v for v in world.corrupt_round if world.corrupt_round[v] <= r)

    def _base_chain(self, world, v, t):
        val = world.validators[v]
        base = val.chain_ava
        if val.store.slot_of(base) >= t:
            base = GENESIS.id
        return base

    def on_round(self, world, r):
        phase, t = phase_at(r, world.delta)
        bad = self._corrupted(world, r)
        if not bad:
            return
        if phase == PHASE_PROPOSE:
            v = world.schedule.proposer(t)
            if v in bad:
                self._equivocate_proposal(world, v, t, r)
        elif phase == PHASE_VOTE:
            for v in bad:
                base = self._base_chain(world, v, t)
                chains = [
                    world.mint_block(base, t, [make_tx(f"eq:{v}:{t}:{i}")]).id
                    for i in range(2)
                ]
                fins = None
                if world.mode == MODE_B:
                    gj = greatest_justified(world.validators[v].view, world.n)
                    fins = [
                        FinVote(gj, Checkpoint(chain, t), v) for chain in chains
                    ]
                world.byz_equivocate_vote(v, t, chains, r, fins=fins)

    def _equivocate_proposal(self, world, v, t, r):
        val = world.validators[v]
        if world.mode == MODE_B:
            chain_c, qc = fastconfirm_gadget(val.view, t - 1, world.n)
            gj = greatest_justified(val.view, world.n)
        else:
            chain_c, qc = fastconfirm_simple(val.store, val.view.votes_at(t - 1), t - 1, world.n)
            gj = None
        chi = mfc(val.store, val.view.window_votes(t), val.view.window_votes(t), chain_c, t)
        everyone = {u: r + world.delta for u in range(world.n) if u != v}
        for i in range(2):
            block = world.mint_block(chi, t, [make_tx(f"eqp:{v}:{t}:{i}")])
            msg = ProposeMsg(block.id, chain_c, qc, gj, t, v)
            world.send_adversarial(v, msg, r, everyone)


class WithholdScript(NullScript):
    """Corrupted validators stay silent: indistinguishable from sleeping."""

    name = "withhold"

    def on_round(self, world, r):
        for v, cr in world.corrupt_round.items():
            if cr <= r:
                world.byz_withhold(v, r)


class ReplayScript(NullScript):
    """Corrupted validators re-broadcast recent traffic (set semantics make
    this a no-op for honest views)."""

    name = "replay"

    def on_round(self, world, r):
        phase, _t = phase_at(r, world.delta)
        if phase != PHASE_VOTE:
            return
        for v in sorted(world.corrupt_round):
            if world.corrupt_round[v] <= r:
                world.byz_replay(v, r)


class PartitionScript(NullScript):
    """Pre-GST delay control only (no corrupted validators needed): messages
    crossing the group boundary during [start, GST) are held to the GST+delta
    bound, intra-group traffic flows at full speed."""

    name = "partition"

    def bind(self, world):
        super().bind(world)
        groups = self.params.get("groups")
        if groups is None:
            half = world.n // 2
            groups = [list(range(half)), list(range(half, world.n))]
        self.group_of = {}
        for gi, members in enumerate(groups):
            for v in members:
                self.group_of[v] = gi
        self.start = int(self.params.get("start", 0))

    def delivery_override(self, msg, sender, recipient, rnd):
        if rnd >= self.world.gst or rnd < self.start:
            return rnd + self.world.delta
        if self.group_of.get(sender) == self.group_of.get(recipient):
            return rnd + self.world.delta
        return None  # fall back to the max(r, GST) + delta bound


class DoubleFinalizationScript(NullScript):
    """Coordinated double finalization.  The colluders propose one chain per
    honest group (equivocating proposals pre-GST keep the groups apart), copy
    each group's fin-votes to reach the supermajority threshold on both sides,
    and thereby finalize two conflicting chains.  Their paired fin-votes are
    double votes, so attribution identifies exactly the colluders."""

    name = "double_finalization"

    def bind(self, world):
        super().bind(world)
        k = int(self.params.get("colluders", max(1, -(-world.n // 3))))
        honest = list(range(world.n - k))
        self.colluders = list(range(world.n - k, world.n))
        half = len(honest) // 2
        self.groups = [honest[:half], honest[half:]]
        self.group_of = {}
        for gi, members in enumerate(self.groups):
            for v in members:
                self.group_of[v] = gi

    def delivery_override(self, msg, sender, recipient, rnd):
        # colluders see both sides; honest groups never see each other pre-GST
        if rnd >= self.world.gst:
            return rnd + self.world.delta
        if recipient in self.colluders:
            return rnd + self.world.delta
        if self.group_of.get(sender) == self.group_of.get(recipient):
            return rnd + self.world.delta
        return None

    def _recipients(self, world, group, rnd):
        members = set(self.groups[group]) | set(self.colluders)
        return {u: rnd + world.delta for u in sorted(members)}

    def on_round(self, world, r):
        phase, t = phase_at(r, world.delta)
        leader = self.colluders[0]
        if world.corrupt_round.get(leader, 1 << 60) > r:
            return
        if phase == PHASE_PROPOSE and world.schedule.proposer(t) == leader:
            for gi, members in enumerate(self.groups):
                if not members:
                    continue
                val = world.validators[members[0]]
                chain_c, qc = fastconfirm_gadget(val.view, t - 1, world.n)
                gj = greatest_justified(val.view, world.n)
                chi = mfc(
                    val.store, val.view.window_votes(t), val.view.window_votes(t), chain_c, t
                )
                block = world.mint_block(chi, t, [make_tx(f"split:{t}:{gi}")])
                msg = ProposeMsg(block.id, chain_c, qc, gj, t, leader)
                world.send_adversarial(leader, msg, r, self._recipients(world, gi, r))
        elif phase == PHASE_VOTE:
            # copy one honest vote per group, re-signed by every colluder
            for gi, members in enumerate(self.groups):
                template = next(
                    (m for v, m in world.last_emissions
                     if isinstance(m, VoteMsg) and self.group_of.get(v) == gi),
                    None,
                )
                if template is None:
                    continue
                recipients = self._recipients(world, gi, r)
                for c in self.colluders:
                    fin = template.fin
                    if fin is not None:
                        fin = FinVote(fin.source, fin.target, c)
                    clone = VoteMsg(template.chain, fin, t, c)
                    world.send_adversarial(c, clone, r, recipients)


_SCRIPTS = {
    "null": NullScript,
    "equivocation": EquivocationScript,
    "withhold": WithholdScript,
    "replay": ReplayScript,
    "partition": PartitionScript,
    "double_finalization": DoubleFinalizationScript,
}


def script_names() -> list[str]:
    return sorted(_SCRIPTS)


def make_script(spec: AttackSpec | None, seed: int):
    if spec is None:
        return NullScript({}, seed)
    try:
        cls = _SCRIPTS[spec.name]
    except KeyError:
        raise ScriptError(
            f"unknown attack script {spec.name!r}; known: {script_names()}"
        ) from None
    return cls(spec.params, seed)


# -- canned attack scenarios ---------------------------------------------------


def double_finalization_scenario(n: int = 9, colluders: int = 3,
                                 slots: int = 6, seed: int = 7,
                                 delta: int = 1) -> Scenario:
    """Partitioned double finalization: the colluders propose every slot and
    the network never reunifies within the horizon (GST past the end)."""
    from .scenario import ScenarioError

    if not 1 <= colluders < n:
        raise ScenarioError("colluders", f"need 1 <= colluders < n, got {colluders}")
    horizon = 4 * delta * slots
    leader = n - colluders
    return Scenario(
        n=n,
        delta=delta,
        kappa=2,
        gst=horizon + 1,
        gat=0,
        horizon_slots=slots,
        seed=seed,
        mode=MODE_B,
        proposer_overrides={t: leader for t in range(slots)},
        corruptions=tuple(Corruption(v, 0) for v in range(leader, n)),
        attack=AttackSpec("double_finalization", {"colluders": colluders}),
        expected_fail=("fin_safety_check", "safety_check"),
    )


def partition_scenario(n: int = 10, slots: int = 24, gst_slot: int = 14,
                       partition_start_slot: int = 6, seed: int = 3,
                       delta: int = 1, kappa: int = 3) -> Scenario:
    """Honest run with a network partition between two halves from
    partition_start until GST; finality stalls, the available chains fork,
    and both recover after GST."""
    return Scenario(
        n=n,
        delta=delta,
        kappa=kappa,
        gst=4 * delta * gst_slot,
        gat=0,
        horizon_slots=slots,
        seed=seed,
        mode=MODE_B,
        attack=AttackSpec(
            "partition", {"start": 4 * delta * partition_start_slot}
        ),
        txs=(TxInjection(0, (make_tx("p0"), make_tx("p1"))),),
        # the available chain forks while the network is split; proposals made
        # inside the partition are legitimately reorged away afterwards
        expected_fail=("safety_check", "reorg_resilience_check"),
    )


def rejustification_scenario(n: int = 9, slots: int = 12, stall_slot: int = 5,
                             seed: int = 11, delta: int = 1, kappa: int = 3) -> Scenario:
    """Force the three-slot path: more than n/3 validators sleep through the
    vote round of `stall_slot`, so no checkpoint is justified there and the
    next proposer runs the re-justification branch."""
    sleepers = range(n - (n // 3 + 1), n)
    vr = 4 * delta * stall_slot + delta
    from .scenario import SleepInterval

    return Scenario(
        n=n,
        delta=delta,
        kappa=kappa,
        gst=0,
        gat=vr + 1,
        horizon_slots=slots,
        seed=seed,
        mode=MODE_B,
        # keep elected proposers outside the sleeper set
        proposer_overrides={t: t % (n - len(sleepers)) for t in range(slots)},
        sleep=tuple(SleepInterval(v, vr, vr + 1) for v in sleepers),
    )


ATTACK_SCENARIOS = {
    "double_finalization": double_finalization_scenario,
    "partition": partition_scenario,
    "rejustification": rejustification_scenario,
}
