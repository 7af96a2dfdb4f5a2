"""Seed handling.

A single integer seed is expanded into independent named streams with
numpy's ``SeedSequence`` spawn keys feeding the counter-based Philox
generator, so a stream depends only on ``(seed, keys)`` and never on the
order in which other streams were drawn.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError("stream keys must be non-negative")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def stream(seed: int, *keys) -> np.random.Generator:
    """Return the generator for the named sub-stream ``keys`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(0 if rng is None else int(rng))
