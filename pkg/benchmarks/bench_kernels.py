"""Benchmark the counting kernels: numba @njit backend vs pure-numpy fallback.

Two views of the cost:
  * kernel microbenchmarks over synthetic block trees and vote sets at
    several sizes (the shape the simulator produces);
  * one end-to-end scenario run per backend.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from ebbflow import kernels
from ebbflow.blocks import GENESIS, BlockStore, make_block, make_tx
from ebbflow.runner import run_scenario
from ebbflow.scenario import Scenario


def synthetic_tree(rng: random.Random, n_blocks: int, max_slot: int) -> BlockStore:
    store = BlockStore()
    ids = [GENESIS.id]
    while len(store) < n_blocks:
        parent = ids[rng.randrange(len(ids))]
        pslot = store.slot_of(parent)
        if pslot >= max_slot:
            continue
        blk = make_block(parent, rng.randint(pslot + 1, max_slot), (make_tx(len(store)),))
        store.insert(blk)
        ids.append(blk.id)
    return store


def bench_kernel(backend, store: BlockStore, n_votes: int, rng: random.Random,
                 repeat: int) -> tuple[float, float]:
    size = store.size
    pairs = sorted(
        (rng.randrange(max(4, n_votes // 2)), rng.randrange(size)) for _ in range(n_votes)
    )
    voters = np.array([p[0] for p in pairs], np.int64)
    tips = np.array([p[1] for p in pairs], np.int64)
    args = (store.parent_arr, store.slot_arr, store.keyhi_arr, store.keylo_arr, size)
    backend.mfc_select(*args, tips, 0, n_votes)  # warm (JIT) before timing
    backend.fastconfirm_select(*args, voters, tips, 2)
    t0 = time.perf_counter()
    for _ in range(repeat):
        backend.mfc_select(*args, tips, 0, n_votes)
    t_mfc = (time.perf_counter() - t0) / repeat
    t0 = time.perf_counter()
    for _ in range(repeat):
        backend.fastconfirm_select(*args, voters, tips, max(2, (2 * n_votes) // 3))
    t_fc = (time.perf_counter() - t0) / repeat
    return t_mfc, t_fc


def bench_end_to_end(name: str) -> float:
    kernels.select_backend(name)
    sc = Scenario(n=50, horizon_slots=16, delta=1, kappa=3, seed=1234, mode="B")
    t0 = time.perf_counter()
    run_scenario(sc)
    return time.perf_counter() - t0


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()

    from ebbflow.kernels import numba_backend, numpy_backend

    backends = [("numba", numba_backend), ("numpy", numpy_backend)]
    shapes = [(32, 24), (128, 60), (512, 200)]  # (blocks, votes)

    print(f"{'kernel':<16} {'blocks':>7} {'votes':>6} {'numba us':>10} {'numpy us':>10} {'speedup':>8}")
    rng = random.Random(7)
    for n_blocks, n_votes in shapes:
        store = synthetic_tree(rng, n_blocks, max_slot=n_blocks)
        rows = {}
        for name, mod in backends:
            rows[name] = bench_kernel(mod, store, n_votes, random.Random(3), args.repeat)
        for i, kname in enumerate(("mfc_select", "fastconfirm")):
            nb, np_ = rows["numba"][i], rows["numpy"][i]
            print(f"{kname:<16} {n_blocks:>7} {n_votes:>6} {nb * 1e6:>10.1f} "
                  f"{np_ * 1e6:>10.1f} {np_ / nb:>7.1f}x")

    print()
    for name, _ in backends:
        dt = bench_end_to_end(name)
        print(f"end-to-end n=50, 16 slots, backend={name:<6} {dt:.2f}s")
    kernels.select_backend("auto")


if __name__ == "__main__":
    main()
