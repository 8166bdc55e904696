"""Seeded xoshiro256** generator for reproducible verification inputs.

The exact algorithm is part of the tool contract so other implementations
can regenerate identical inputs from the same 64-bit seed:

* state: four u64 words produced by iterating splitmix64 on the seed
  (gamma 0x9E3779B97F4A7C15, mix constants 0xBF58476D1CE4E5B9 and
  0x94D049BB133111EB);
* output: ``rotl(s1 * 5, 7) * 9`` with rotation/update per Blackman &
  Vigna's xoshiro256**;
* doubles: ``(next_u64() >> 11) * 2**-53`` in [0, 1).
"""

from __future__ import annotations

import numpy as np

__all__ = ["Xoshiro256StarStar"]

_MASK = (1 << 64) - 1


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """Deterministic 64-bit generator; not for cryptographic use."""

    def __init__(self, seed: int):
        sm = seed & _MASK
        s = []
        for _ in range(4):
            sm, word = _splitmix64(sm)
            s.append(word)
        if not any(s):  # all-zero state would be a fixed point
            s[0] = 1
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def fill(self, shape, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
        """Array of uniforms drawn in row-major element order."""
        n = int(np.prod(shape)) if shape else 1
        out = np.empty(n)
        for idx in range(n):
            out[idx] = self.uniform(lo, hi)
        return out.reshape(shape)
