"""Hot counting kernels for fork choice and fast confirmation.

Both operations reduce to "count vote support per block over the ancestor
closure of the voted tips, then pick the best qualifying block".  Two
interchangeable backends implement them: a numba @njit backend (default when
numba is importable) and a pure-numpy one.  Selection is controlled by the
EBBFLOW_KERNELS environment variable: "auto" (default), "numba" or "numpy";
`select_backend` overrides it at runtime.

Kernel contracts (shared by both backends):

mfc_select(parent, slot, keyhi, keylo, n_blocks, tips, base, s_size) -> int
    `tips[i]` is the block index voted by the i-th message.  Returns the index
    of the longest chain tip that descends from `base` (or is `base`) and is
    supported by strictly more than s_size/2 messages; `base` itself always
    qualifies.  Ties break by (greatest slot, smallest 128-bit hash prefix,
    smallest index).

fastconfirm_select(parent, slot, keyhi, keylo, n_blocks, voters, tips,
                   threshold) -> int
    (voters[i], tips[i]) pairs MUST be sorted by voter.  Returns the index of
    the greatest block supported by at least `threshold` distinct voters
    (same tie-break), or -1 when no block qualifies.
"""

from __future__ import annotations

import os

_BACKEND = None
_BACKEND_NAME = None

_VALID = ("auto", "numba", "numpy")


def _load(name: str):
    if name == "numpy":
        from . import numpy_backend as mod
        return mod, "numpy"
    if name == "numba":
        from . import numba_backend as mod
        return mod, "numba"
    # auto
    try:
        from . import numba_backend as mod
        return mod, "numba"
    except ImportError:
        from . import numpy_backend as mod
        return mod, "numpy"


def select_backend(name: str):
    """Force a backend ("numba" or "numpy"); returns the backend module."""
    global _BACKEND, _BACKEND_NAME
    if name not in _VALID:
        raise ValueError(f"unknown kernel backend {name!r}; expected one of {_VALID}")
    _BACKEND, _BACKEND_NAME = _load(name)
    return _BACKEND


def get_backend():
    global _BACKEND, _BACKEND_NAME
    if _BACKEND is None:
        env = os.environ.get("EBBFLOW_KERNELS", "auto").strip().lower()
        if env not in _VALID:
            raise ValueError(
                f"EBBFLOW_KERNELS={env!r} invalid; expected one of {_VALID}"
            )
        _BACKEND, _BACKEND_NAME = _load(env)
    return _BACKEND


def backend_name() -> str:
    get_backend()
    return _BACKEND_NAME


def mfc_select(parent, slot, keyhi, keylo, n_blocks, tips, base, s_size) -> int:
    return int(get_backend().mfc_select(parent, slot, keyhi, keylo, n_blocks, tips, base, s_size))


def fastconfirm_select(parent, slot, keyhi, keylo, n_blocks, voters, tips, threshold) -> int:
    return int(
        get_backend().fastconfirm_select(
            parent, slot, keyhi, keylo, n_blocks, voters, tips, threshold
        )
    )


def warmup() -> str:
    """Trigger JIT compilation on a tiny instance; returns the backend name."""
    import numpy as np

    parent = np.array([-1, 0], np.int64)
    slot = np.array([-1, 0], np.int64)
    key = np.array([0, 1], np.uint64)
    mfc_select(parent, slot, key, key, 2, np.array([1], np.int64), 0, 1)
    fastconfirm_select(parent, slot, key, key, 2, np.array([0], np.int64),
                       np.array([1], np.int64), 1)
    return backend_name()
