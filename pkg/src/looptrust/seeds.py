"""Deterministic seed derivation for replicated experiments.

Children are derived from a master seed through numpy's SeedSequence spawn
keys, so adding replicates or reordering execution never changes the streams
of existing replicates.
"""

from __future__ import annotations

import numpy as np

__all__ = ["child_seed", "child_rng"]


def _sequence(master: int, path: tuple[int, ...]) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(p) for p in path))


def child_seed(master: int, *path: int) -> int:
    """A 64-bit integer seed for the (master, *path) lineage."""
    state = _sequence(master, path).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def child_rng(master: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(_sequence(master, path))
