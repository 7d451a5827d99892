"""Deterministic, splittable random streams for Monte Carlo trials.

Streams are keyed by (master seed, purpose tag, block index) through
numpy's SeedSequence spawn keys, a counter-based construction: any worker
can regenerate any block independently, so results never depend on worker
count or scheduling.  Trials are grouped into fixed-size blocks and every
block is always generated in full (callers slice off what they need), so
raising the trial count never perturbs draws of earlier trials.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

TRIAL_BLOCK = 4096

# Stable purpose tags; values are part of the determinism contract.
TAG_LEVEL_SAMPLE = 1
TAG_WINDOW_HIT = 2
TAG_HIT_COUNT = 3
TAG_COVERAGE = 4
TAG_EMPIRICAL_COV = 5
TAG_HIT_FREQ = 6


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the given (seed, path) key."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def trial_blocks(
    trials: int, seed: int, tag: int, block: int = TRIAL_BLOCK
) -> Iterator[tuple[int, int, np.random.Generator]]:
    """Yield (start, count, rng) per block covering `trials` trials.

    `count` is the number of trials the caller should keep from this block;
    the generator is always fresh for the block regardless of how many
    blocks precede it.
    """
    if trials < 0:
        raise ValueError("trials must be >= 0")
    start = 0
    index = 0
    while start < trials:
        count = min(block, trials - start)
        yield start, count, stream(seed, tag, index)
        start += count
        index += 1
