"""Seed derivation and counter-based Gaussian streams.

Every random quantity in the package is a pure function of an integer seed
and a tuple of integer keys, so results never depend on evaluation order or
on how work is split across threads.
"""

from __future__ import annotations

import os

import numpy as np

SEED_MASK = (1 << 64) - 1

THREADS_ENV = "REMGREM_THREADS"


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    return seed


def generator(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator keyed by ``(seed, *keys)``."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Hash ``(seed, *keys)`` to a fresh 64-bit seed."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def replica_seeds(seed: int, replicas: int) -> list[int]:
    return [derive_seed(seed, r) for r in range(replicas)]


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        threads = int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    return max(threads, 1)
