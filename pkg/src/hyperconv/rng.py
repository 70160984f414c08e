"""Deterministic random streams keyed by explicit seed tuples.

Every stochastic operation in the package (init, dropout, data synthesis,
augmentation, noise, shuffling) draws from its own Philox stream derived
from a key like ``(seed, "dropout", epoch, step)``.  Philox is counter
based, so streams with different keys are independent and a given key
always reproduces the same values, regardless of call order elsewhere.
"""

import hashlib

import numpy as np


def _key128(parts) -> int:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        if isinstance(p, (int, np.integer)):
            h.update(b"i" + int(p).to_bytes(16, "little", signed=True))
        elif isinstance(p, str):
            h.update(b"s" + p.encode("utf-8"))
        elif isinstance(p, float):
            h.update(b"f" + np.float64(p).tobytes())
        else:
            raise TypeError(f"unsupported seed component: {p!r}")
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def stream(*key) -> np.random.Generator:
    """Return the Generator for a seed key (ints, strings, floats)."""
    return np.random.Generator(np.random.Philox(key=_key128(key)))


def derive(*key) -> int:
    """Collapse a seed key to a plain integer sub-seed."""
    return _key128(key) & 0xFFFFFFFFFFFFFFF
