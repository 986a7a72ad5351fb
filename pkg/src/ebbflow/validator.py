"""Per-validator protocol state machine.

Two modes share the phase schedule (propose / vote / fast-confirm / merge at
4*delta*t + {0, delta, 2*delta, 3*delta}):

* mode A: the probabilistically-safe variant.  One confirmed chain, advanced
  by the kappa-deep prefix of the fork choice and by same-slot fast
  confirmations when a two-thirds quorum votes for one chain.
* mode B: mode A plus the finality gadget.  Votes carry a checkpoint link,
  the proposer ships its greatest justified checkpoint, and the validator
  additionally outputs the finalized chain.

Handlers are deterministic functions of (state, view, round); the simulator
owns scheduling, delivery and sleep/corruption bookkeeping.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import kernels
from .blocks import GENESIS, BlockStore
from .finality import (
    greatest_finalized,
    greatest_justified,
    is_justified,
    supermajority,
)
from .forkchoice import mfc
from .messages import (
    Checkpoint,
    FinVote,
    GENESIS_CHECKPOINT,
    ProposeMsg,
    VoteMsg,
    checkpoint_geq,
)
from .views import View

MODE_A = "A"
MODE_B = "B"


# -- round clock --------------------------------------------------------------

def slot_of_round(r: int, delta: int) -> int:
    return r // (4 * delta)


def propose_round(t: int, delta: int) -> int:
    return 4 * delta * t


def vote_round(t: int, delta: int) -> int:
    return 4 * delta * t + delta


def fastconfirm_round(t: int, delta: int) -> int:
    return 4 * delta * t + 2 * delta


def merge_round(t: int, delta: int) -> int:
    return 4 * delta * t + 3 * delta


PHASE_PROPOSE = "propose"
PHASE_VOTE = "vote"
PHASE_FASTCONFIRM = "fastconfirm"
PHASE_MERGE = "merge"


def phase_at(r: int, delta: int) -> tuple[str | None, int]:
    """Phase anchored at round r (None between anchors when delta > 1)."""
    t, rem = divmod(r, 4 * delta)
    if rem == 0:
        return PHASE_PROPOSE, t
    if rem == delta:
        return PHASE_VOTE, t
    if rem == 2 * delta:
        return PHASE_FASTCONFIRM, t
    if rem == 3 * delta:
        return PHASE_MERGE, t
    return None, t


def activation_round(wake: int, delta: int) -> int:
    """Joining protocol: waking in (vote(t-2)+delta, vote(t-1)+delta] makes
    the validator active (allowed to send) from vote(t)."""
    if wake <= 0:
        return 0
    t = -((2 * delta - wake) // (4 * delta)) + 1
    return vote_round(t, delta)


# -- fast confirmation --------------------------------------------------------

def fastconfirm_simple(
    store: BlockStore, votes: Sequence[VoteMsg], t: int, n: int
) -> tuple[bytes, tuple[VoteMsg, ...]]:
    """Greatest chain supported by slot-t votes from at least ceil(2n/3)
    distinct validators, with the supporting votes as quorum certificate;
    (genesis, empty) when no chain qualifies."""
    votes = [v for v in votes if v.slot == t]
    if not votes:
        return GENESIS.id, ()
    pairs = sorted(((v.voter, store.index_of(v.chain)) for v in votes))
    voters = np.fromiter((p[0] for p in pairs), np.int64, count=len(pairs))
    tips = np.fromiter((p[1] for p in pairs), np.int64, count=len(pairs))
    best = kernels.fastconfirm_select(
        store.parent_arr,
        store.slot_arr,
        store.keyhi_arr,
        store.keylo_arr,
        store.size,
        voters,
        tips,
        supermajority(n),
    )
    if best < 0:
        return GENESIS.id, ()
    cand = store.id_at(best)
    qc = tuple(
        sorted((v for v in votes if store.is_prefix(cand, v.chain)), key=lambda v: v.key)
    )
    return cand, qc


def fastconfirm_simple_view(view: View, t: int, n: int) -> tuple[bytes, tuple[VoteMsg, ...]]:
    """fastconfirm_simple over a view, memoized per (slot, n): slot vote
    lists are append-only, so their length identifies the input."""
    count = view.vote_count_at(t)
    hit = view.fastconfirm_cache.get((t, n))
    if hit is not None and hit[0] == count:
        return hit[1]
    result = fastconfirm_simple(view.store, view.votes_at(t), t, n)
    view.fastconfirm_cache[(t, n)] = (count, result)
    return result


def fastconfirm_gadget(view: View, t: int, n: int) -> tuple[bytes, tuple[VoteMsg, ...]]:
    """Mode B wrapper: pass the simple result through when it extends the
    greatest justified chain, else fall back to that chain with no quorum."""
    cand, qc = fastconfirm_simple_view(view, t, n)
    gj = greatest_justified(view, n)
    if view.store.is_prefix(gj.chain, cand):
        return cand, qc
    return gj.chain, ()


# -- validator ----------------------------------------------------------------

class Validator:
    def __init__(
        self,
        vid: int,
        n: int,
        delta: int,
        kappa: int,
        mode: str,
        proposer_of: Callable[[int], int],
    ):
        if mode not in (MODE_A, MODE_B):
            raise ValueError(f"unknown mode {mode!r}")
        self.vid = vid
        self.n = n
        self.delta = delta
        self.kappa = kappa
        self.mode = mode
        self.proposer_of = proposer_of
        self.store = BlockStore()
        self.view = View(self.store)
        self.frozen_cutoff = -1  # arrival cutoff representing the frozen view
        self.chain_frozen: bytes = GENESIS.id
        self.gj_frozen: Checkpoint = GENESIS_CHECKPOINT
        self.chain_ava: bytes = GENESIS.id
        self.chain_fin: bytes = GENESIS.id
        self._pending: dict[int, list[ProposeMsg]] = {}

    # -- receipt ---------------------------------------------------------

    def receive_vote(self, vote: VoteMsg, rnd: int) -> None:
        self.view.add_vote(vote, rnd)

    def receive_proposal(self, msg: ProposeMsg, rnd: int) -> None:
        """Proposals count toward the view whenever they arrive, but drive
        state updates only if received in [propose(t), vote(t)]; the effects
        are applied at vote(t)."""
        if not self.view.add_proposal(msg, rnd):
            return
        if propose_round(msg.slot, self.delta) <= rnd <= vote_round(msg.slot, self.delta):
            self._pending.setdefault(msg.slot, []).append(msg)

    # -- proposal validity -------------------------------------------------

    def proposal_valid(self, msg: ProposeMsg) -> bool:
        store = self.store
        if msg.chain_p not in store or msg.chain_c not in store:
            return False
        if msg.proposer != self.proposer_of(msg.slot):
            return False
        if store.slot_of(msg.chain_p) != msg.slot:
            return False
        if not store.is_prefix(msg.chain_c, msg.chain_p):
            return False
        if self.mode == MODE_B:
            if msg.gj is None or msg.gj.chain not in store:
                return False
            if msg.gj.c < 0 or msg.gj.c < store.slot_of(msg.gj.chain):
                return False
        elif msg.gj is not None:
            return False
        if not msg.qc:
            anchor = msg.gj.chain if self.mode == MODE_B else GENESIS.id
            return msg.chain_c == anchor
        if any(v.slot != msg.slot - 1 for v in msg.qc):
            return False
        if any(v.chain not in store for v in msg.qc):
            return False
        if len({v.voter for v in msg.qc}) < supermajority(self.n):
            return False
        return all(store.is_prefix(msg.chain_c, v.chain) for v in msg.qc)

    # -- phase handlers ----------------------------------------------------

    def on_propose(self, t: int, pool: Sequence[bytes]) -> tuple[ProposeMsg, dict]:
        if self.mode == MODE_B:
            chain_c, qc = fastconfirm_gadget(self.view, t - 1, self.n)
            gj = greatest_justified(self.view, self.n)
        else:
            chain_c, qc = fastconfirm_simple_view(self.view, t - 1, self.n)
            gj = None
        chi_can = mfc(
            self.store,
            self.view.window_votes(t),
            self.view.window_votes(t),
            chain_c,
            t,
        )
        block = self.store.extend(chi_can, t, pool)
        msg = ProposeMsg(block.id, chain_c, qc, gj, t, self.vid)
        return msg, {"mfc": chi_can, "block": block}

    def _apply_pending_proposals(self, t: int) -> list[ProposeMsg]:
        """The buffered upon-clause, applied at vote(t).  Returns the valid
        slot-t proposals (used for vote-chain selection)."""
        store = self.store
        valid: list[ProposeMsg] = []
        for msg in sorted(self._pending.pop(t, ()), key=lambda m: m.key):
            if not self.proposal_valid(msg):
                continue
            valid.append(msg)
            if self.mode == MODE_B:
                if is_justified(msg.gj, self.view, self.n) and checkpoint_geq(
                    msg.gj, self.gj_frozen
                ):
                    self.gj_frozen = msg.gj
                    if not store.is_prefix(self.gj_frozen.chain, self.chain_frozen):
                        self.chain_frozen = self.gj_frozen.chain
                    if store.is_prefix(self.chain_frozen, msg.chain_c):
                        self.chain_frozen = msg.chain_c
            else:
                if store.is_prefix(self.chain_frozen, msg.chain_c):
                    self.chain_frozen = msg.chain_c
        return valid

    def on_vote(self, t: int) -> tuple[VoteMsg, dict]:
        store = self.store
        valid_props = self._apply_pending_proposals(t)
        chi_can = mfc(
            store,
            self.view.window_votes(t, self.frozen_cutoff),
            self.view.window_votes(t),
            self.chain_frozen,
            t,
        )
        kdeep = store.kappa_deep_prefix(chi_can, t, self.kappa)
        cands = [self.chain_ava, kdeep]
        if self.mode == MODE_B:
            cands.append(self.gj_frozen.chain)
        self.chain_ava = store.max_chain(
            [c for c in cands if store.is_prefix(c, chi_can)]
        )
        fin = None
        if self.mode == MODE_B:
            gf = greatest_finalized(self.view, self.n)
            self.chain_fin = store.lcp(self.chain_ava, gf.chain)
            if self.gj_frozen.c == t - 1:
                target = Checkpoint(self.chain_ava, t)
            else:
                target = Checkpoint(self.gj_frozen.chain, t)
            fin = FinVote(self.gj_frozen, target, self.vid)
        extending = [m.chain_p for m in valid_props if store.is_prefix(chi_can, m.chain_p)]
        vote_chain = min(extending) if extending else chi_can
        msg = VoteMsg(vote_chain, fin, t, self.vid)
        return msg, {"mfc": chi_can, "kdeep": kdeep}

    def on_fastconfirm(self, t: int) -> dict:
        if self.mode == MODE_B:
            cand, _ = fastconfirm_gadget(self.view, t, self.n)
            if not self.store.is_prefix(cand, self.chain_ava):
                self.chain_ava = cand
            self.chain_fin = greatest_finalized(self.view, self.n).chain
        else:
            cand, qc = fastconfirm_simple_view(self.view, t, self.n)
            if qc:
                self.chain_ava = cand
        return {"cand": cand}

    def on_merge(self, t: int, rnd: int) -> dict:
        self.frozen_cutoff = rnd
        if self.mode == MODE_B:
            self.chain_frozen, _ = fastconfirm_gadget(self.view, t, self.n)
            self.gj_frozen = greatest_justified(self.view, self.n)
        else:
            self.chain_frozen, _ = fastconfirm_simple_view(self.view, t, self.n)
        return {"chain_frozen": self.chain_frozen}
