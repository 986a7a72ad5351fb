"""Pure-numpy implementations of the counting kernels.

Vectorized over the walk depth: every step advances all still-walking cursors
one parent hop at once, so the loops run O(tree depth) numpy calls instead of
O(messages * depth) python steps.
"""

from __future__ import annotations

import numpy as np


def _pick_best(cand_idx, slot, keyhi, keylo):
    order = np.lexsort((cand_idx, keylo[cand_idx], keyhi[cand_idx], -slot[cand_idx]))
    return int(cand_idx[order[0]])


def mfc_select(parent, slot, keyhi, keylo, n_blocks, tips, base, s_size):
    counts = np.zeros(n_blocks, np.int64)
    cur = np.asarray(tips, np.int64).copy()
    while cur.size:
        np.add.at(counts, cur, 1)
        cur = parent[cur]
        cur = cur[cur >= 0]
    base_slot = int(slot[base])
    # lift every block to the depth of base; descendants land exactly on base
    anc = np.arange(n_blocks, dtype=np.int64)
    while True:
        moving = slot[anc] > base_slot
        if not moving.any():
            break
        anc[moving] = parent[anc[moving]]
    qualifies = (anc == base) & (2 * counts > s_size)
    qualifies[base] = True
    cand_idx = np.nonzero(qualifies)[0]
    return _pick_best(cand_idx, slot, keyhi, keylo)


def fastconfirm_select(parent, slot, keyhi, keylo, n_blocks, voters, tips, threshold):
    if len(tips) == 0:
        return -1
    cur = np.asarray(tips, np.int64).copy()
    vt = np.asarray(voters, np.int64).copy()
    levels = []
    while cur.size:
        levels.append(vt * np.int64(n_blocks) + cur)
        nxt = parent[cur]
        keep = nxt >= 0
        cur = nxt[keep]
        vt = vt[keep]
    pairs = np.unique(np.concatenate(levels))
    counts = np.bincount((pairs % np.int64(n_blocks)).astype(np.int64), minlength=n_blocks)
    cand_idx = np.nonzero(counts >= threshold)[0]
    if cand_idx.size == 0:
        return -1
    return _pick_best(cand_idx, slot, keyhi, keylo)
