"""Seed derivation and random generator construction.

All randomness in the package flows from 64-bit seeds through PCG64.
Named sub-streams are derived with FNV-1a so that every consumer gets an
independent, reproducible stream from a single top-level seed.
"""

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def derive_seed(seed: int, label: str) -> int:
    """Derive a named sub-stream seed from a parent seed."""
    payload = (seed & _MASK64).to_bytes(8, "little") + label.encode("utf-8")
    return fnv1a64(payload)


def generator(seed: int, label: str = "") -> np.random.Generator:
    """PCG64 generator seeded from (seed, label)."""
    s = derive_seed(seed, label) if label else (seed & _MASK64)
    return np.random.Generator(np.random.PCG64(s))
