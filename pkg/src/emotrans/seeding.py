"""Derived RNG streams: one global seed fans out to named sub-seeds."""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *keys) -> int:
    """Stable 63-bit seed for ``(seed, *keys)``; independent of call order."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(seed),) + tuple(str(k) for k in keys)).encode("utf-8"))
    return int.from_bytes(h.digest(), "little") >> 1


def rng_for(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))
