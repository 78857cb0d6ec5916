"""
Seeded random streams

Every generator is a Philox counter-based bit generator keyed by a
numpy SeedSequence, so a replication's stream depends only on
(master_seed, *keys) and parallel runs reproduce serial runs.
"""
from typing import Union

import numpy as np

SeedLike = Union[int, np.integer, np.random.Generator, None]

_SEED_MASK = (1 << 64) - 1


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Build the stream for (seed, *keys)

    Args:
        seed: 64-bit unsigned master seed
        keys: stream path, e.g. (grid_index, rep_index, stage)

    Returns:
        np.random.Generator: Philox-backed generator
    """
    sequence = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """Hash (seed, *keys) to a fresh 64-bit seed"""
    sequence = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Accept an integer seed, an existing generator, or None (fresh entropy)"""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    return make_rng(int(seed))
