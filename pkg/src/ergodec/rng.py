"""Deterministic random-stream construction.

All randomness flows through numpy Generators seeded from a 64-bit master
seed. Parallel work derives one child stream per task index with
``substream(seed, index)``, so results never depend on how tasks are
scheduled across workers.
"""
from __future__ import annotations

import numpy as np

RandomStream = np.random.Generator


def stream_from_seed(seed: int) -> RandomStream:
    """Master stream for a 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def substream(seed: int, *key: int) -> RandomStream:
    """Child stream for (seed, key...); identical for any worker layout."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))
