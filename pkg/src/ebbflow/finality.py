"""Checkpoints, justification, finalization and slashing detection.

A set of finality votes sharing a (source, target) link from at least
ceil(2n/3) distinct validators forms a supermajority link.  A checkpoint is
justified when it is reachable from the genesis checkpoint through valid
supermajority links; it is finalized when it is justified and a supermajority
link leaves it for a target exactly one checkpoint slot later.  Both
predicates are computed by a forward pass over the view's links in ascending
target-slot order (valid links strictly increase the slot, so one pass is a
fixpoint).

Slashing conditions on pairs of distinct finality votes by one validator:
double voting (equal target slots) and surround voting (one link's slots
strictly inside the other's).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .blocks import BlockStore
from .messages import Checkpoint, FinVote, GENESIS_CHECKPOINT, encode_finvote
from .views import View


class NoConflictingFinalityError(ValueError):
    """Attribution precondition unmet: the two views finalize compatible
    chains (distinct from finding no evidence)."""


def supermajority(n: int) -> int:
    """Distinct-voter threshold: smallest integer >= 2n/3."""
    return -(-2 * n // 3)


def checkpoint_wellformed(store: BlockStore, cp: Checkpoint) -> bool:
    return cp.chain in store and cp.c >= 0 and cp.c >= store.slot_of(cp.chain)


def valid_link(store: BlockStore, src: Checkpoint, tgt: Checkpoint) -> bool:
    """A link is valid when both checkpoints are well-formed, the source
    chain is a prefix of the target chain and the source slot is smaller."""
    if not (checkpoint_wellformed(store, src) and checkpoint_wellformed(store, tgt)):
        return False
    return src.c < tgt.c and store.is_prefix(src.chain, tgt.chain)


def valid_finvote(store: BlockStore, fv: FinVote) -> bool:
    return valid_link(store, fv.source, fv.target)


class _FinCache:
    __slots__ = ("version", "n", "justified", "finalized", "gj", "gf")

    def __init__(self, version, n, justified, finalized, gj, gf):
        self.version = version
        self.n = n
        self.justified = justified
        self.finalized = finalized
        self.gj = gj
        self.gf = gf


def _link_valid_cached(view: View, src: Checkpoint, tgt: Checkpoint) -> bool:
    cache = view.link_valid_cache
    ok = cache.get((src, tgt))
    if ok is None:
        ok = valid_link(view.store, src, tgt)
        # validity is stable once both chains are resolvable (blocks are
        # delivered with the votes that reference them)
        if ok or (src.chain in view.store and tgt.chain in view.store):
            cache[(src, tgt)] = ok
    return ok


def _greatest(cps) -> Checkpoint:
    best = None
    for cp in cps:
        if best is None or cp.c > best.c or (cp.c == best.c and cp.chain < best.chain):
            best = cp
    return best


def _compute(view: View, n: int) -> _FinCache:
    thr = supermajority(n)
    justified: set[Checkpoint] = {GENESIS_CHECKPOINT}
    finalized: set[Checkpoint] = {GENESIS_CHECKPOINT}
    strong = [
        (src, tgt)
        for (src, tgt), voters in view.links.items()
        if len(voters) >= thr and _link_valid_cached(view, src, tgt)
    ]
    strong.sort(key=lambda st: (st[1].c, st[1].chain, st[0].c, st[0].chain))
    for src, tgt in strong:
        if src in justified:
            justified.add(tgt)
    for src, tgt in strong:
        if src in justified and tgt.c == src.c + 1:
            finalized.add(src)
    return _FinCache(
        view.fin_version,
        n,
        frozenset(justified),
        frozenset(finalized),
        _greatest(justified),
        _greatest(finalized),
    )


def _cache(view: View, n: int) -> _FinCache:
    cache = view.fin_cache
    if cache is None or cache.version != view.fin_version or cache.n != n:
        cache = _compute(view, n)
        view.fin_cache = cache
    return cache


def justified_checkpoints(view: View, n: int) -> frozenset[Checkpoint]:
    return _cache(view, n).justified


def finalized_checkpoints(view: View, n: int) -> frozenset[Checkpoint]:
    return _cache(view, n).finalized


def is_justified(cp: Checkpoint, view: View, n: int) -> bool:
    return cp in _cache(view, n).justified


def is_finalized(cp: Checkpoint, view: View, n: int) -> bool:
    return cp in _cache(view, n).finalized


def greatest_justified(view: View, n: int) -> Checkpoint:
    return _cache(view, n).gj


def greatest_finalized(view: View, n: int) -> Checkpoint:
    return _cache(view, n).gf


# -- slashing ---------------------------------------------------------------

E1 = "E1"  # double voting: distinct fin-votes with equal target slots
E2 = "E2"  # surround voting: one link's slots strictly inside the other's


@dataclass(frozen=True)
class SlashingEvidence:
    voter: int
    kind: str
    vote_a: FinVote
    vote_b: FinVote

    def verify(self) -> bool:
        a, b = self.vote_a, self.vote_b
        if a == b or a.voter != self.voter or b.voter != self.voter:
            return False
        if self.kind == E1:
            return a.target.c == b.target.c
        if self.kind == E2:
            return _surrounds(b, a) or _surrounds(a, b)
        return False


def _surrounds(outer: FinVote, inner: FinVote) -> bool:
    return outer.source.c < inner.source.c < inner.target.c < outer.target.c


def _evidence(voter: int, kind: str, a: FinVote, b: FinVote) -> SlashingEvidence:
    if encode_finvote(b) < encode_finvote(a):
        a, b = b, a
    return SlashingEvidence(voter, kind, a, b)


def detect_slashable(finvotes: Iterable[FinVote]) -> frozenset[SlashingEvidence]:
    """Pairwise scan of each validator's distinct fin-votes for the double
    vote and surround vote conditions.  Complete and sound: every offending
    pair is reported and every report re-verifies."""
    by_voter: dict[int, list[FinVote]] = {}
    for fv in finvotes:
        lst = by_voter.setdefault(fv.voter, [])
        if fv not in lst:
            lst.append(fv)
    out: set[SlashingEvidence] = set()
    for voter, votes in by_voter.items():
        for i in range(len(votes)):
            for j in range(i + 1, len(votes)):
                a, b = votes[i], votes[j]
                if a.target.c == b.target.c:
                    out.add(_evidence(voter, E1, a, b))
                elif _surrounds(a, b) or _surrounds(b, a):
                    out.add(_evidence(voter, E2, a, b))
    return frozenset(out)


def conflicting_finalized(
    store: BlockStore, view_a: View, view_b: View, n: int
) -> tuple[Checkpoint, Checkpoint] | None:
    """A pair of finalized checkpoints with conflicting chains across the two
    views, or None."""
    fa = sorted(finalized_checkpoints(view_a, n), key=lambda c: c.sort_key())
    fb = sorted(finalized_checkpoints(view_b, n), key=lambda c: c.sort_key())
    for ca in fa:
        for cb in fb:
            if store.conflicts(ca.chain, cb.chain):
                return ca, cb
    return None


def attribute_conflicting_finality(
    store: BlockStore, view_a: View, view_b: View, n: int
) -> frozenset[SlashingEvidence]:
    """Given two views finalizing conflicting chains, return slashing
    evidence from the union of their fin-votes.  Raises when the precondition
    (a conflicting finalized pair) does not hold."""
    if conflicting_finalized(store, view_a, view_b, n) is None:
        raise NoConflictingFinalityError(
            "no conflicting finalized checkpoints across the two views"
        )
    union = {*view_a.all_finvotes(), *view_b.all_finvotes()}
    return detect_slashable(union)


def implicated_validators(evidence: Iterable[SlashingEvidence]) -> frozenset[int]:
    return frozenset(e.voter for e in evidence)
