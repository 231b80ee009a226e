"""Seed handling.

Every random draw in the package goes through a Philox (counter-based)
generator. Integer seeds are expanded with ``SeedSequence`` so that
independent streams can be split off a single 64-bit run seed.
"""

from __future__ import annotations

import numpy as np

SeedLike = "int | np.random.Generator | None"


def make_rng(seed=None, *stream: int) -> np.random.Generator:
    """Return a Philox generator for ``seed``; Generators pass through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *stream: int) -> int:
    """Deterministic 64-bit child seed for a named sub-stream of ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
