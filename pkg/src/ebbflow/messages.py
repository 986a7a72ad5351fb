"""Wire messages and the finality-gadget value types.

Two message kinds travel the network: VOTE (chain vote, optionally carrying a
finality vote / checkpoint link) and PROPOSE (proposed chain, fast-confirmed
base chain with its quorum certificate, and optionally the proposer's greatest
justified checkpoint).  Every message has a canonical byte encoding; its
SHA-256 is the message key used for set semantics and deterministic ordering.
"""

from __future__ import annotations

import hashlib
from typing import Iterable

from .blocks import GENESIS

TAG_VOTE = b"\x01"
TAG_PROPOSE = b"\x02"


class Checkpoint:
    """(chain tip, checkpoint slot) pair; ordered by slot, with equality only
    for identical checkpoints."""

    __slots__ = ("chain", "c", "_hash")

    def __init__(self, chain: bytes, c: int):
        self.chain = chain
        self.c = c
        self._hash = hash((chain, c))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Checkpoint)
            and other.c == self.c
            and other.chain == self.chain
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Checkpoint({self.chain.hex()[:8]}, c={self.c})"

    def sort_key(self) -> tuple[int, bytes]:
        return (self.c, self.chain)


GENESIS_CHECKPOINT = Checkpoint(GENESIS.id, 0)


def checkpoint_geq(a: Checkpoint, b: Checkpoint) -> bool:
    """a >= b in checkpoint order.  Distinct checkpoints with equal slots are
    incomparable, so this is a.c > b.c or a == b."""
    return a.c > b.c or a == b


class FinVote:
    """Finality vote linking a source checkpoint to a target checkpoint."""

    __slots__ = ("source", "target", "voter", "_hash")

    def __init__(self, source: Checkpoint, target: Checkpoint, voter: int):
        self.source = source
        self.target = target
        self.voter = voter
        self._hash = hash((source, target, voter))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FinVote)
            and other.voter == self.voter
            and other.source == self.source
            and other.target == self.target
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"FinVote({self.source!r} -> {self.target!r}, voter={self.voter})"


def encode_checkpoint(cp: Checkpoint) -> bytes:
    return cp.chain + cp.c.to_bytes(8, "little", signed=True)


def encode_finvote(fv: FinVote) -> bytes:
    return (
        encode_checkpoint(fv.source)
        + encode_checkpoint(fv.target)
        + fv.voter.to_bytes(4, "little")
    )


class VoteMsg:
    """[VOTE, chain, fin-vote, slot, voter].  fin is None in the variant
    without the finality gadget."""

    __slots__ = ("chain", "fin", "slot", "voter", "key")

    def __init__(self, chain: bytes, fin: FinVote | None, slot: int, voter: int):
        self.chain = chain
        self.fin = fin
        self.slot = slot
        self.voter = voter
        self.key = hashlib.sha256(self.encode()).digest()

    def encode(self) -> bytes:
        out = bytearray(TAG_VOTE)
        out += self.chain
        if self.fin is None:
            out += b"\x00"
        else:
            out += b"\x01"
            out += encode_finvote(self.fin)
        out += self.slot.to_bytes(8, "little", signed=True)
        out += self.voter.to_bytes(4, "little")
        return bytes(out)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VoteMsg) and other.key == self.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"VoteMsg(slot={self.slot}, voter={self.voter}, chain={self.chain.hex()[:8]})"


class ProposeMsg:
    """[PROPOSE, chain_p, chain_c, qc, gj, slot, proposer].  gj is None in the
    variant without the finality gadget; qc is kept in canonical key order."""

    __slots__ = ("chain_p", "chain_c", "qc", "gj", "slot", "proposer", "key")

    def __init__(
        self,
        chain_p: bytes,
        chain_c: bytes,
        qc: Iterable[VoteMsg],
        gj: Checkpoint | None,
        slot: int,
        proposer: int,
    ):
        self.chain_p = chain_p
        self.chain_c = chain_c
        self.qc = tuple(sorted(qc, key=lambda v: v.key))
        self.gj = gj
        self.slot = slot
        self.proposer = proposer
        self.key = hashlib.sha256(self.encode()).digest()

    def encode(self) -> bytes:
        out = bytearray(TAG_PROPOSE)
        out += self.chain_p
        out += self.chain_c
        out += len(self.qc).to_bytes(4, "little")
        for vote in self.qc:
            out += vote.encode()
        if self.gj is None:
            out += b"\x00"
        else:
            out += b"\x01"
            out += encode_checkpoint(self.gj)
        out += self.slot.to_bytes(8, "little", signed=True)
        out += self.proposer.to_bytes(4, "little")
        return bytes(out)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ProposeMsg) and other.key == self.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return (
            f"ProposeMsg(slot={self.slot}, proposer={self.proposer}, "
            f"chain_p={self.chain_p.hex()[:8]})"
        )


Message = VoteMsg | ProposeMsg
