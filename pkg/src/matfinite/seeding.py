"""Deterministic seed expansion.

One 64-bit root seed is expanded per component through
``numpy.random.SeedSequence(root, spawn_key=path)``; the same (root, path)
pair always yields the same child seed, independent of call order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["split_seed", "rng_for"]


def split_seed(seed: int, *path: int) -> int:
    """Child seed for the component addressed by ``path`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(split_seed(seed, *path))
