"""Small shared helpers."""

from __future__ import annotations

import numpy as np


def seeded_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic generator for a (seed, stream-key) pair.

    Distinct keys give independent streams, so parallel or repeated draws
    cannot collide just because they share the user-facing seed.
    """
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    )
