"""Seed derivation.

All randomness in the package flows from one user seed.  Independent streams
are obtained by mixing that seed with an operation name and integer indices
(step, cell, permutation number) through :class:`numpy.random.SeedSequence`,
so the same ``(seed, name, indices)`` always yields the same stream and
distinct keys yield statistically independent ones.
"""

import zlib

import numpy as np

from .errors import RejectedInputError

_MASK64 = (1 << 64) - 1


def _name_key(name):
    return zlib.crc32(name.encode("utf-8"))


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise RejectedInputError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise RejectedInputError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def seed_sequence(seed, *keys):
    """Return the SeedSequence for ``seed`` under a key path.

    String keys are hashed with CRC-32; integer keys are used directly.
    """
    seed = check_seed(seed)
    path = []
    for key in keys:
        if isinstance(key, str):
            path.append(_name_key(key))
        else:
            key = int(key)
            if key < 0:
                raise RejectedInputError(f"stream index must be non-negative, got {key}")
            path.append(key)
    return np.random.SeedSequence(seed, spawn_key=tuple(path))


def derive_rng(seed, *keys):
    """A fresh PCG64 generator for the stream ``(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed, *keys):
    """A 64-bit integer seed for the stream ``(seed, *keys)``."""
    state = seed_sequence(seed, *keys).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])
