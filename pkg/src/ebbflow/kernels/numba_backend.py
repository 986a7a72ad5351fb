"""numba @njit implementations of the counting kernels."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _better(b, best, slot, keyhi, keylo):
    # order: greater slot, then smaller (keyhi, keylo), then smaller index
    if slot[b] != slot[best]:
        return slot[b] > slot[best]
    if keyhi[b] != keyhi[best]:
        return keyhi[b] < keyhi[best]
    if keylo[b] != keylo[best]:
        return keylo[b] < keylo[best]
    return b < best


@njit(cache=True)
def mfc_select(parent, slot, keyhi, keylo, n_blocks, tips, base, s_size):
    counts = np.zeros(n_blocks, np.int64)
    for i in range(tips.shape[0]):
        cur = tips[i]
        while cur != -1:
            counts[cur] += 1
            cur = parent[cur]
    base_slot = slot[base]
    best = base
    for b in range(n_blocks):
        if b == base:
            continue
        if 2 * counts[b] <= s_size:
            continue
        if slot[b] <= base_slot:
            continue
        cur = b
        while slot[cur] > base_slot:
            cur = parent[cur]
        if cur != base:
            continue
        # any qualifier strictly descends from base, so it beats base on slot
        if _better(b, best, slot, keyhi, keylo):
            best = b
    return best


@njit(cache=True)
def fastconfirm_select(parent, slot, keyhi, keylo, n_blocks, voters, tips, threshold):
    # voters must arrive grouped (sorted); marker then makes each (voter,
    # block) pair count once: when a block is already marked by this voter so
    # are all its ancestors, and the walk can stop.
    marker = np.full(n_blocks, -1, np.int64)
    counts = np.zeros(n_blocks, np.int64)
    for i in range(tips.shape[0]):
        v = voters[i]
        cur = tips[i]
        while cur != -1 and marker[cur] != v:
            marker[cur] = v
            counts[cur] += 1
            cur = parent[cur]
    best = -1
    for b in range(n_blocks):
        if counts[b] >= threshold:
            if best == -1 or _better(b, best, slot, keyhi, keylo):
                best = b
    return best
