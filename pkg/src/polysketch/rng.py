"""Deterministic, splittable random streams.

Every random object in the library is a pure function of a 64-bit seed.
Independent components draw from independent streams obtained by keying a
counter-based Philox generator with ``(seed, tag, index)``.  The derivation
uses only integer arithmetic, so identical seeds reproduce identical streams
across platforms and runs.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of a role tag (stable across platforms)."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(seed: int, tag: str, index: int = 0) -> int:
    """Derive a child seed for a named sub-component.

    Distinct ``(tag, index)`` pairs give statistically independent child
    seeds; the map is deterministic integer arithmetic.
    """
    mixed = (seed & _MASK64) ^ _fnv1a64(tag) ^ _splitmix64(index & _MASK64)
    return _splitmix64(mixed)


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """A Philox generator keyed by ``(seed, tag, index)``.

    Philox is counter-based: streams with different keys are provably
    non-overlapping, which is what lets one master seed feed many sketches.
    """
    key = np.array(
        [seed & _MASK64, derive_seed(seed, tag, index)], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


def rademacher(rng: np.random.Generator, size: int) -> np.ndarray:
    """i.i.d. uniform +/-1 entries as float64."""
    return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
