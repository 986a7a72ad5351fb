"""Backend agreement: the numba and numpy kernels must pick identical blocks."""

import random

import numpy as np
import pytest

from ebbflow import kernels
from ebbflow.blocks import BlockStore
from ebbflow.kernels import numba_backend, numpy_backend

from oracles import gen_tree


def _random_instance(seed):
    rng = random.Random(seed)
    store, ids = gen_tree(rng, BlockStore, max_blocks=14, max_slot=8)
    n_votes = rng.randint(0, 20)
    voters = sorted(rng.randrange(7) for _ in range(n_votes))
    tips = [store.index_of(ids[rng.randrange(len(ids))]) for _ in range(n_votes)]
    order = sorted(range(n_votes), key=lambda i: (voters[i], tips[i]))
    return store, (
        np.array([voters[i] for i in order], np.int64),
        np.array([tips[i] for i in order], np.int64),
    )


@pytest.mark.parametrize("seed", range(40))
def test_backends_agree(seed):
    rng = random.Random(seed * 977 + 5)
    store, (voters, tips) = _random_instance(seed)
    args = (store.parent_arr, store.slot_arr, store.keyhi_arr, store.keylo_arr, store.size)
    base = rng.randrange(store.size)
    s_size = rng.randint(0, 9)
    assert numba_backend.mfc_select(*args, tips, base, s_size) == numpy_backend.mfc_select(
        *args, tips, base, s_size
    )
    thr = rng.randint(1, 6)
    assert numba_backend.fastconfirm_select(
        *args, voters, tips, thr
    ) == numpy_backend.fastconfirm_select(*args, voters, tips, thr)


def test_backend_selection_env(monkeypatch):
    monkeypatch.setenv("EBBFLOW_KERNELS", "numpy")
    kernels._BACKEND = None
    assert kernels.backend_name() == "numpy"
    monkeypatch.setenv("EBBFLOW_KERNELS", "nonsense")
    kernels._BACKEND = None
    with pytest.raises(ValueError):
        kernels.backend_name()
    monkeypatch.delenv("EBBFLOW_KERNELS")
    kernels._BACKEND = None
    assert kernels.backend_name() in ("numba", "numpy")
    kernels.select_backend("numba")
    assert kernels.backend_name() == "numba"


def test_backends_produce_identical_traces():
    """An end-to-end run under the numpy fallback is byte-identical to the
    numba run."""
    from ebbflow.runner import run_scenario
    from ebbflow.scenario import random_compliant_scenario

    sc = random_compliant_scenario(77, n_max=8, slots=8)
    dumps = {}
    for name in ("numba", "numpy"):
        kernels.select_backend(name)
        try:
            dumps[name] = run_scenario(sc).dumps()
        finally:
            kernels.select_backend("auto")
    assert dumps["numba"] == dumps["numpy"]


def test_distinct_voter_counting_with_shared_ancestors():
    store = BlockStore()
    from ebbflow.blocks import GENESIS, make_block, make_tx

    a = make_block(GENESIS.id, 0, (make_tx("a"),))
    b = make_block(a.id, 1, (make_tx("b"),))
    c = make_block(a.id, 2, (make_tx("c"),))
    for blk in (a, b, c):
        store.insert(blk)
    # one voter voting two tips must count once per shared ancestor
    voters = np.array([0, 0, 1], np.int64)
    tips = np.array(
        sorted([store.index_of(b.id), store.index_of(c.id)]) + [store.index_of(b.id)],
        np.int64,
    )
    order = np.lexsort((tips, voters))
    voters, tips = voters[order], tips[order]
    args = (store.parent_arr, store.slot_arr, store.keyhi_arr, store.keylo_arr, store.size)
    # threshold 2: blocks supported by both voters are a, genesis and b
    best = numba_backend.fastconfirm_select(*args, voters, tips, 2)
    assert store.id_at(int(best)) == b.id
    assert numpy_backend.fastconfirm_select(*args, voters, tips, 2) == best
    # threshold 3 is unreachable
    assert numba_backend.fastconfirm_select(*args, voters, tips, 3) == -1
