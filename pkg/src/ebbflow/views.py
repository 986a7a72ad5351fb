"""Per-validator message view.

A view is the set of messages a validator has received so far.  Messages are
tagged with their arrival round so that a past snapshot of the view (the
frozen view taken at merge rounds) can be queried with an arrival cutoff
instead of copying the container.  The view also maintains an incremental
index of finality links (source, target) -> distinct voters, which is all the
justification machinery needs.
"""

from __future__ import annotations

from .blocks import BlockStore
from .messages import Checkpoint, FinVote, ProposeMsg, VoteMsg


class View:
    __slots__ = (
        "store",
        "_arrival",
        "_votes_by_slot",
        "_proposals_by_slot",
        "links",
        "fin_version",
        "fin_cache",
        "link_valid_cache",
        "fastconfirm_cache",
    )

    def __init__(self, store: BlockStore):
        self.store = store
        self._arrival: dict[bytes, int] = {}
        self._votes_by_slot: dict[int, list[tuple[int, VoteMsg]]] = {}
        self._proposals_by_slot: dict[int, list[tuple[int, ProposeMsg]]] = {}
        self.links: dict[tuple[Checkpoint, Checkpoint], set[int]] = {}
        self.fin_version = 0
        self.fin_cache = None
        self.link_valid_cache: dict[tuple[Checkpoint, Checkpoint], bool] = {}
        self.fastconfirm_cache: dict[tuple[int, int], tuple[int, object]] = {}

    def __contains__(self, key: bytes) -> bool:
        return key in self._arrival

    def __len__(self) -> int:
        return len(self._arrival)

    def add_vote(self, vote: VoteMsg, rnd: int) -> bool:
        if vote.key in self._arrival:
            return False
        self._arrival[vote.key] = rnd
        self._votes_by_slot.setdefault(vote.slot, []).append((rnd, vote))
        fv = vote.fin
        if fv is not None:
            voters = self.links.setdefault((fv.source, fv.target), set())
            if fv.voter not in voters:
                voters.add(fv.voter)
                self.fin_version += 1
        return True

    def add_proposal(self, msg: ProposeMsg, rnd: int) -> bool:
        if msg.key in self._arrival:
            return False
        self._arrival[msg.key] = rnd
        self._proposals_by_slot.setdefault(msg.slot, []).append((rnd, msg))
        return True

    def votes_at(self, slot: int, cutoff: int | None = None) -> list[VoteMsg]:
        entries = self._votes_by_slot.get(slot, ())
        if cutoff is None:
            return [v for _, v in entries]
        return [v for r, v in entries if r <= cutoff]

    def vote_count_at(self, slot: int) -> int:
        return len(self._votes_by_slot.get(slot, ()))

    def window_votes(self, t: int, cutoff: int | None = None) -> list[VoteMsg]:
        """Votes for the expiry window {t-1, t}."""
        return self.votes_at(t - 1, cutoff) + self.votes_at(t, cutoff)

    def proposals_at(self, slot: int, cutoff: int | None = None) -> list[ProposeMsg]:
        entries = self._proposals_by_slot.get(slot, ())
        if cutoff is None:
            return [p for _, p in entries]
        return [p for r, p in entries if r <= cutoff]

    def all_votes(self) -> list[VoteMsg]:
        out: list[VoteMsg] = []
        for slot in sorted(self._votes_by_slot):
            out.extend(v for _, v in self._votes_by_slot[slot])
        return out

    def all_finvotes(self) -> list[FinVote]:
        out: list[FinVote] = []
        for (src, tgt), voters in self.links.items():
            out.extend(FinVote(src, tgt, voter) for voter in sorted(voters))
        return out
