"""Seed splitting for reproducible parallel runs.

A child seed is ``SeedSequence(parent, spawn_key=indices)`` reduced to one
64-bit word. numpy documents the SeedSequence hashing as stable across
releases, so a sweep cell can be rerun in isolation from its indices alone.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(parent: int, *indices: int) -> int:
    """Mix ``parent`` with stream ``indices`` into an independent 64-bit seed."""
    seq = np.random.SeedSequence(int(parent) & MASK64, spawn_key=tuple(int(i) for i in indices))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int, *indices: int) -> np.random.Generator:
    if indices:
        seed = derive_seed(seed, *indices)
    return np.random.default_rng(int(seed) & MASK64)
