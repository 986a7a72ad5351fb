"""Content-addressed block tree with prefix and confirmation-depth queries.

Blocks are identified by the SHA-256 of their canonical encoding and a chain
is identified by its tip block id ("chains are tips").  The store is a pure
in-memory value structure owned by one simulation thread.  Alongside the
id-keyed maps it maintains flat arrays (parent index, slot, hash tie-break
key) so the hot fork-choice kernels can run directly over it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

HASH_LEN = 32
ZERO_ID = b"\x00" * HASH_LEN
GENESIS_SLOT = -1

ACCEPTED = "accepted"
DUPLICATE = "duplicate"
MISSING_PARENT = "missing-parent"


class MalformedBlockError(ValueError):
    """Block violates a structural invariant (hash, slot or parent rule)."""


class UnknownBlockError(KeyError):
    """Referenced chain tip is not present in the store."""


def encode_block(parent: bytes | None, slot: int, body: Sequence[bytes]) -> bytes:
    """Canonical block encoding: parent (32B, zero for genesis) || slot
    (8B signed LE) || tx count (4B LE) || 32B tx ids."""
    out = bytearray()
    out += parent if parent is not None else ZERO_ID
    out += slot.to_bytes(8, "little", signed=True)
    out += len(body).to_bytes(4, "little")
    for tx in body:
        if len(tx) != HASH_LEN:
            raise MalformedBlockError(f"tx id must be {HASH_LEN} bytes, got {len(tx)}")
        out += tx
    return bytes(out)


def block_id(parent: bytes | None, slot: int, body: Sequence[bytes]) -> bytes:
    return hashlib.sha256(encode_block(parent, slot, body)).digest()


@dataclass(frozen=True)
class Block:
    id: bytes
    parent: bytes | None
    slot: int
    body: tuple[bytes, ...]


def make_block(parent: bytes | None, slot: int, body: Sequence[bytes] = ()) -> Block:
    body = tuple(body)
    return Block(id=block_id(parent, slot, body), parent=parent, slot=slot, body=body)


GENESIS = make_block(None, GENESIS_SLOT)


def make_tx(label: object) -> bytes:
    """Deterministic opaque 32-byte transaction id."""
    return hashlib.sha256(f"tx:{label}".encode()).digest()


class BlockStore:
    """Rooted block tree.  Insertion requires the parent to be present
    (missing parents are buffered by the delivery layer, not here)."""

    def __init__(self) -> None:
        self._blocks: dict[bytes, Block] = {}
        self._index: dict[bytes, int] = {}
        self._ids: list[bytes] = []
        self._children: dict[bytes, list[bytes]] = {}
        # flat mirrors for the kernels; python lists for fast scalar walks
        self._parent_l: list[int] = []
        self._slot_l: list[int] = []
        cap = 256
        self._parent_a = np.empty(cap, np.int64)
        self._slot_a = np.empty(cap, np.int64)
        self._keyhi_a = np.empty(cap, np.uint64)
        self._keylo_a = np.empty(cap, np.uint64)
        self._size = 0
        self._txs_memo: dict[bytes, frozenset[bytes]] = {GENESIS.id: frozenset()}
        self._append(GENESIS, parent_idx=-1)

    # -- structure -----------------------------------------------------

    def _append(self, block: Block, parent_idx: int) -> None:
        i = self._size
        if i == len(self._parent_a):
            for name in ("_parent_a", "_slot_a", "_keyhi_a", "_keylo_a"):
                arr = getattr(self, name)
                grown = np.empty(len(arr) * 2, arr.dtype)
                grown[:i] = arr[:i]
                setattr(self, name, grown)
        self._blocks[block.id] = block
        self._index[block.id] = i
        self._ids.append(block.id)
        self._children.setdefault(block.id, [])
        if block.parent is not None:
            self._children[block.parent].append(block.id)
        self._parent_l.append(parent_idx)
        self._slot_l.append(block.slot)
        self._parent_a[i] = parent_idx
        self._slot_a[i] = block.slot
        self._keyhi_a[i] = int.from_bytes(block.id[:8], "big")
        self._keylo_a[i] = int.from_bytes(block.id[8:16], "big")
        self._size = i + 1

    def insert(self, block: Block) -> str:
        """Insert a block; returns ACCEPTED, DUPLICATE or MISSING_PARENT.
        Malformed blocks (id mismatch, slot rule, parent rule) raise."""
        if block_id(block.parent, block.slot, block.body) != block.id:
            raise MalformedBlockError("block id does not match its contents")
        if block.id in self._blocks:
            return DUPLICATE
        if block.parent is None:
            # only genesis may be parentless, and it is pre-inserted
            raise MalformedBlockError("non-genesis block without a parent")
        if block.parent not in self._blocks:
            return MISSING_PARENT
        if block.slot <= self._blocks[block.parent].slot:
            raise MalformedBlockError(
                f"child slot {block.slot} not greater than parent slot "
                f"{self._blocks[block.parent].slot}"
            )
        self._append(block, parent_idx=self._index[block.parent])
        return ACCEPTED

    def __contains__(self, bid: bytes) -> bool:
        return bid in self._blocks

    def __len__(self) -> int:
        return self._size

    def get(self, bid: bytes) -> Block:
        try:
            return self._blocks[bid]
        except KeyError:
            raise UnknownBlockError(bid.hex()) from None

    def slot_of(self, bid: bytes) -> int:
        return self._slot_l[self.index_of(bid)]

    def index_of(self, bid: bytes) -> int:
        try:
            return self._index[bid]
        except KeyError:
            raise UnknownBlockError(bid.hex()) from None

    def id_at(self, idx: int) -> bytes:
        return self._ids[idx]

    def block_at(self, idx: int) -> Block:
        return self._blocks[self._ids[idx]]

    def children_of(self, bid: bytes) -> list[bytes]:
        return list(self._children.get(bid, ()))

    def all_ids(self) -> list[bytes]:
        return list(self._blocks.keys())

    # kernel-facing array views (length == size)
    @property
    def parent_arr(self) -> np.ndarray:
        return self._parent_a[: self._size]

    @property
    def slot_arr(self) -> np.ndarray:
        return self._slot_a[: self._size]

    @property
    def keyhi_arr(self) -> np.ndarray:
        return self._keyhi_a[: self._size]

    @property
    def keylo_arr(self) -> np.ndarray:
        return self._keylo_a[: self._size]

    @property
    def size(self) -> int:
        return self._size

    # -- chain queries ---------------------------------------------------

    def is_prefix(self, a: bytes, b: bytes) -> bool:
        """Non-strict prefix: a's tip lies on b's ancestor path."""
        ia = self.index_of(a)
        cur = self.index_of(b)
        sa = self._slot_l[ia]
        slots, parents = self._slot_l, self._parent_l
        while slots[cur] > sa:
            cur = parents[cur]
        return cur == ia

    def is_strict_prefix(self, a: bytes, b: bytes) -> bool:
        return a != b and self.is_prefix(a, b)

    def conflicts(self, a: bytes, b: bytes) -> bool:
        return not self.is_prefix(a, b) and not self.is_prefix(b, a)

    def ancestors(self, bid: bytes) -> list[bytes]:
        """Path from tip to genesis, inclusive."""
        out = [bid]
        blk = self.get(bid)
        while blk.parent is not None:
            out.append(blk.parent)
            blk = self._blocks[blk.parent]
        return out

    def kappa_deep_prefix(self, tip: bytes, t: int, kappa: int) -> bytes:
        """Deepest ancestor (inclusive) with slot <= t - kappa; clamps to
        genesis when even genesis is too recent."""
        if kappa <= 1:
            raise ValueError("kappa must be greater than 1")
        cur = self.index_of(tip)
        cutoff = t - kappa
        slots, parents = self._slot_l, self._parent_l
        while slots[cur] > cutoff and parents[cur] != -1:
            cur = parents[cur]
        return self._ids[cur]

    def lcp(self, a: bytes, b: bytes) -> bytes:
        """Longest common prefix (deepest common ancestor) of two chains."""
        ia, ib = self.index_of(a), self.index_of(b)
        slots, parents = self._slot_l, self._parent_l
        while ia != ib:
            if slots[ia] >= slots[ib]:
                ia = parents[ia]
            else:
                ib = parents[ib]
        return self._ids[ia]

    def chain_sort_key(self, bid: bytes) -> tuple[int, bytes]:
        """Total order used for deterministic maxima: height first, then the
        smallest tip hash wins ties (key sorts ascending)."""
        return (self.slot_of(bid), bid)

    def max_chain(self, tips: Sequence[bytes]) -> bytes:
        """Greatest chain by height, smallest tip hash breaking ties."""
        best: bytes | None = None
        best_slot = 0
        for tip in tips:
            s = self.slot_of(tip)
            if best is None or s > best_slot or (s == best_slot and tip < best):
                best, best_slot = tip, s
        if best is None:
            raise ValueError("max_chain over empty set")
        return best

    def chain_txs(self, tip: bytes) -> frozenset[bytes]:
        """Set of transaction ids included anywhere on the chain."""
        memo = self._txs_memo
        path = []
        cur = tip
        while cur not in memo:
            path.append(cur)
            cur = self.get(cur).parent  # genesis memoized, so parent exists
        acc = memo[cur]
        for bid in reversed(path):
            acc = acc | frozenset(self._blocks[bid].body)
            memo[bid] = acc
        return memo[tip]

    def extend(self, tip: bytes, t: int, pool: Sequence[bytes]) -> Block:
        """Produce (and insert) the single block extending `tip` at slot `t`
        whose body is every pool tx not already on the chain, in pool order."""
        if self.slot_of(tip) >= t:
            raise ValueError(
                f"cannot extend chain at slot {self.slot_of(tip)} to slot {t}"
            )
        have = self.chain_txs(tip)
        body = []
        seen: set[bytes] = set()
        for tx in pool:
            if tx in have or tx in seen:
                continue
            seen.add(tx)
            body.append(tx)
        block = make_block(tip, t, body)
        self.insert(block)
        return block
