"""Seeded random streams.

All randomness goes through Philox, a counter-based generator: the 64-bit
seed is the key and a stream path such as ``(step, lane)`` selects a
disjoint block of counter space. Step ``t`` therefore draws the same numbers
no matter how many draws earlier steps made.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def normalize_seed(seed) -> int:
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be a non-negative 64-bit integer, got {seed}")
    return seed & MASK64


def stream(seed, *path: int) -> np.random.Generator:
    """Generator for stream ``path`` under ``seed``.

    ``path`` holds up to three non-negative integers, written into the high
    words of the Philox counter.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if len(path) > 3:
        raise ValueError("stream path holds at most three integers")
    counter = [0, 0, 0, 0]
    for i, p in enumerate(path):
        counter[3 - i] = int(p) & MASK64
    bitgen = np.random.Philox(key=np.array([normalize_seed(seed), 0], dtype=np.uint64),
                              counter=np.array(counter, dtype=np.uint64))
    return np.random.Generator(bitgen)


def sample_index(probs: np.ndarray, rng: np.random.Generator, floor: float = 1e-12) -> int:
    """Draw an index from ``probs``; entries below ``floor`` are never chosen."""
    p = np.where(np.asarray(probs, dtype=float) < floor, 0.0, probs)
    total = p.sum()
    if total <= 0:
        raise ValueError("no outcome has probability above the floor")
    cdf = np.cumsum(p / total)
    u = rng.random()
    idx = int(np.searchsorted(cdf, u, side="right"))
    # guard against cdf[-1] rounding below u
    idx = min(idx, len(p) - 1)
    while p[idx] == 0.0:
        idx -= 1
    return idx
