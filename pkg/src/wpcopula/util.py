"""Deterministic random-stream derivation shared by the whole package.

Every source of randomness is a counter-based Philox generator seeded
through a :class:`numpy.random.SeedSequence` with an explicit ``spawn_key``
path.  Work units (bootstrap replicates, Monte Carlo trials, matrix pairs)
each get their own path, so results do not depend on execution order or on
the number of worker threads.

Stream name constants keep paths collision-free across call sites.
"""

from __future__ import annotations

import os

import numpy as np

# Top-level stream names (first component of every spawn_key path).
STREAM_BOOTSTRAP = 0   # bootstrap replicate b -> (STREAM_BOOTSTRAP, b)
STREAM_CV = 1          # fold shuffling inside cross-validation
STREAM_TRIAL = 2       # experiment trial -> (STREAM_TRIAL, value_index, trial)
STREAM_BETA = 3        # coefficient draw for simulation models
STREAM_PAIR = 4        # ci-matrix pair -> (STREAM_PAIR, pair_index)


def seed_sequence(seed: int, *path: int) -> np.random.SeedSequence:
    """SeedSequence for ``seed`` at the given spawn-key path."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))


def spawn_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox generator keyed by ``(seed, *path)``."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *path)))


def child_seed(seed: int, *path: int) -> int:
    """A 63-bit integer seed derived from ``(seed, *path)``.

    Used where an API takes a plain integer seed (e.g. per-trial test runs);
    the derivation is stable across platforms and numpy versions.
    """
    state = seed_sequence(seed, *path).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


def resolve_threads(threads: int | None) -> int:
    """Worker count: explicit value, else WPCOPULA_THREADS, else cpu count."""
    if threads is not None:
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        return int(threads)
    env = os.environ.get("WPCOPULA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
