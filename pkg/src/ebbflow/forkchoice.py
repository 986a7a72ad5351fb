"""Vote filters and the majority fork-choice function.

The fork choice works over filtered vote sets: equivocations are removed
per slot, votes older than one slot expire, and only each validator's latest
votes are kept.  The composition order is latest-message after expiry after
equivocation removal.  The chain chosen is the longest one that extends the
base chain and is supported, in the intersection of a frozen and a current
view, by strictly more than half of the validators voting in the current
view's expiry window.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from . import kernels
from .blocks import BlockStore
from .messages import VoteMsg


def fil_eq(votes: Iterable[VoteMsg]) -> frozenset[VoteMsg]:
    """Drop every vote of a validator for each slot in which that validator
    voted for two different chains.  Removal is scoped to the offending slot;
    identical duplicate votes are not equivocations (set semantics)."""
    chains: dict[tuple[int, int], bytes] = {}
    bad: set[tuple[int, int]] = set()
    votes = list(votes)
    for v in votes:
        k = (v.voter, v.slot)
        seen = chains.get(k)
        if seen is None:
            chains[k] = v.chain
        elif seen != v.chain:
            bad.add(k)
    return frozenset(v for v in votes if (v.voter, v.slot) not in bad)


def fil_1exp(votes: Iterable[VoteMsg], t: int) -> frozenset[VoteMsg]:
    """Keep exactly the votes with slot in {t-1, t}."""
    return frozenset(v for v in votes if v.slot == t or v.slot == t - 1)


def fil_lmd(votes: Iterable[VoteMsg]) -> frozenset[VoteMsg]:
    """Per validator, keep only the votes at that validator's maximum slot
    present in the input."""
    latest: dict[int, int] = {}
    votes = list(votes)
    for v in votes:
        cur = latest.get(v.voter)
        if cur is None or v.slot > cur:
            latest[v.voter] = v.slot
    return frozenset(v for v in votes if latest[v.voter] == v.slot)


def filtered(votes: Iterable[VoteMsg], t: int) -> frozenset[VoteMsg]:
    """The full composition FIL_lmd(FIL_1exp(FIL_eq(V), t))."""
    return fil_lmd(fil_1exp(fil_eq(votes), t))


def supporting_votes(
    store: BlockStore, votes: Iterable[VoteMsg], chain: bytes, t: int
) -> frozenset[VoteMsg]:
    """Latest, non-expired, non-equivocating votes for chains extending
    `chain`."""
    return frozenset(
        v for v in filtered(votes, t) if store.is_prefix(chain, v.chain)
    )


def voter_set(votes: Iterable[VoteMsg], t: int) -> frozenset[int]:
    """Validators appearing with non-expired votes (expiry filter only;
    equivocators still count)."""
    return frozenset(v.voter for v in fil_1exp(votes, t))


def mfc(
    store: BlockStore,
    v_votes: Iterable[VoteMsg],
    vp_votes: Iterable[VoteMsg],
    base: bytes,
    t: int,
) -> bytes:
    """Majority fork choice: the longest chain extending `base` whose support
    in the filtered intersection of both views exceeds half of the current
    view's voter set; `base` when no extension qualifies.  Equal-length
    winners break ties by smallest tip hash."""
    vp_votes = list(vp_votes)
    s_size = len({v.voter for v in fil_1exp(vp_votes, t)})
    inter = filtered(v_votes, t) & filtered(vp_votes, t)
    if not inter or s_size == 0:
        return base
    tips = np.fromiter(
        (store.index_of(v.chain) for v in inter), np.int64, count=len(inter)
    )
    best = kernels.mfc_select(
        store.parent_arr,
        store.slot_arr,
        store.keyhi_arr,
        store.keylo_arr,
        store.size,
        tips,
        store.index_of(base),
        s_size,
    )
    return store.id_at(best)
