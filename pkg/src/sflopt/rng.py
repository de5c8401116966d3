"""Deterministic random-stream derivation.

Every randomized component draws from a generator derived from the master
seed plus a structural key (device index, grid index, round index, ...), so
results are reproducible and independent of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np


def rng_stream(seed, *key) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
