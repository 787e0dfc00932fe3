"""Seeded random streams.

All randomness goes through :class:`numpy.random.Generator` backed by the
counter-based Philox-4x64 bit generator, so a seed reproduces the same
stream on every platform numpy supports.
"""

import numpy as np


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Generator for ``seed``, optionally split into an independent substream by ``keys``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if keys:
        seed = np.random.SeedSequence([int(seed), *map(int, keys)])
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed for substream ``keys`` of ``seed``."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
