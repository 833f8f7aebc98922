"""Seeded random number streams.

Every randomized API in this package takes an explicit integer seed and maps
it to a Philox counter-based 64-bit generator, so sequences are reproducible
across platforms and independent of execution order. Sub-streams are derived
with SeedSequence spawn keys, never by drawing seeds from a parent stream's
output.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator for ``seed`` refined by a spawn key.

    ``stream(s)`` is the root stream for seed ``s``; ``stream(s, a, b)`` is
    the independent child addressed by ``(a, b)``.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def subseed(rng: np.random.Generator) -> int:
    """Draw a fresh 63-bit integer seed from an existing stream."""
    return int(rng.integers(0, 2**63))
