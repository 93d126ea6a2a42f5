"""Deterministic random-number streams.

Every sampler and probe in the package takes an explicit seed and builds its
own generator, so there is no global RNG state and concurrent calls with
distinct seeds are independent.  Derived streams (per-trial, per-purpose) are
keyed by tuples of non-negative integers fed to ``numpy.random.SeedSequence``,
which acts as the seed hash.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError

Seed = int | tuple[int, ...]


def make_rng(seed: Seed) -> np.random.Generator:
    """Build a PCG64 generator from an integer seed or a tuple of integers."""
    if isinstance(seed, (tuple, list)):
        key = [int(s) for s in seed]
    else:
        key = [int(seed)]
    if any(k < 0 for k in key):
        raise InvalidParameterError(f"seeds must be non-negative integers, got {seed!r}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def derive_seed(base_seed: int, *indices: int) -> tuple[int, ...]:
    """Key for an independent child stream: hash(base_seed, *indices)."""
    return (int(base_seed),) + tuple(int(i) for i in indices)
