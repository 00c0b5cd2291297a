"""Seed handling.

Every pipeline takes one integer seed and derives independent named
substreams from it, so that re-running any stage consumes the same draws
regardless of what other stages do. Stream keys are fixed constants:
drawing the smoothing perturbation never shifts the sketch stream, which
keeps a sigma=0 smoothed solve bit-identical to the plain solver.
"""

from __future__ import annotations

import numpy as np

SKETCH_STREAM = 0
SMOOTH_STREAM = 1
NORM_STREAM = 2


def substream(seed: int, key: int) -> np.random.Generator:
    """Generator for the given named substream of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


def as_generator(seed_or_rng) -> np.random.Generator:
    """Accept an integer seed or a Generator; anything else is rejected."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    if isinstance(seed_or_rng, (int, np.integer)):
        return np.random.default_rng(int(seed_or_rng))
    raise TypeError(f"expected int seed or numpy Generator, got {type(seed_or_rng).__name__}")


def replicate_seed(root_seed: int, index: int) -> int:
    """Deterministic per-replicate seed derived from a root seed."""
    ss = np.random.SeedSequence(entropy=[int(root_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
