"""Seed handling for reproducible, replicate-parallel Monte Carlo.

Every stochastic entry point in this package takes a ``seed`` argument that
may be an integer, a ``numpy.random.SeedSequence``, or an already-built
``numpy.random.Generator``.  Parallel work is split with a counter-based
scheme: task ``i`` of a run with master seed ``m`` draws from
``SeedSequence(m, spawn_key=(i,))``, so the stream assignment depends only on
``(m, i)`` and never on thread scheduling or the order tasks complete in.
"""

from __future__ import annotations

import numpy as np

SeedLike = "int | np.random.SeedSequence | np.random.Generator | None"


def as_generator(seed) -> np.random.Generator:
    """Coerce ``seed`` (int, SeedSequence, Generator, or None) to a Generator.

    ``None`` yields a fresh OS-entropy generator; anything else is
    deterministic.  Passing a Generator returns it unchanged, so callers can
    thread one RNG through a sequence of calls.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(seed)


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the task addressed by ``key``.

    The (master_seed, key) pair fully determines the stream; disjoint keys
    give statistically independent streams.
    """
    if master_seed is None:
        raise ValueError("master_seed must be an integer, not None")
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def split(master_seed: int, count: int, *prefix: int) -> list[np.random.Generator]:
    """``count`` independent generators, one per task index under ``prefix``."""
    return [stream(master_seed, *prefix, i) for i in range(count)]
