"""Deterministic counter-based random streams.

Every stochastic task derives its own Philox generator from the global
seed plus a stream path (e.g. protocol id, time index, circuit index).
Philox is counter-based, so streams with different keys are independent
and bitwise reproducible regardless of execution order or worker count.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fold(parts) -> int:
    # FNV-1a over the stream path; stable across processes, unlike hash().
    h = _FNV_OFFSET
    for p in parts:
        h ^= int(p) & _MASK64
        h = (h * _FNV_PRIME) & _MASK64
    return h


def task_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator keyed by (global seed, folded stream path)."""
    key = np.array([int(seed) & _MASK64, _fold(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def as_generator(seed) -> np.random.Generator:
    """Accept either a ready Generator or a plain integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return task_rng(int(seed))
