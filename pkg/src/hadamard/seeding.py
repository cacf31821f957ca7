"""Deterministic RNG streams split from one run seed by label."""

import zlib

import numpy as np

__all__ = ["rng_for"]


def rng_for(seed, label):
    """Generator for the stream ``label`` of run ``seed``.

    Streams with different labels are independent, and the same pair
    always yields the same numbers.
    """
    if int(seed) < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.default_rng([int(seed), zlib.crc32(label.encode("utf-8"))])
