"""Deterministic seed derivation.

Every random stream in the package is addressed by a path of integers
starting at a 64-bit master seed, e.g. ``(seed, ROW, i)``.  Each step
of the path is folded in with :func:`mix64`, so a stream depends only on
its address and never on the order in which other streams were consumed.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream tags
ROW = 1
DATA = 3
SELECT = 4
PLACE = 5
TRIAL = 6


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 generator (Steele, Lea, Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(seed: int, index: int) -> int:
    """Derive a child seed from ``seed`` and a non-negative ``index``."""
    return splitmix64((seed & MASK64) ^ splitmix64(index & MASK64))


def derive(seed: int, *path: int) -> int:
    for p in path:
        seed = mix64(seed, p)
    return seed


def stream(seed: int, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive(seed, *path)))
