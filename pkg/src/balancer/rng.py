"""Deterministic seeded randomness.

The generator is splitmix64: 64-bit integer state advanced by a fixed odd
constant, output mixed by two xor-shift-multiply rounds.  It is fast, has
a single word of state, and produces identical streams on every platform
because everything is integer arithmetic mod 2^64.  Child generators for
parallel trials are derived by hashing a label into the seed, so trials
never share or race on state.
"""
from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class SeededRng:
    """splitmix64 stream; same seed gives the same draws forever."""

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def uniform(self) -> float:
        # 53 high bits -> [0, 1)
        return (self.next_u64() >> 11) * 2.0**-53

    def sign(self) -> int:
        return 1 if self.next_u64() & 1 else -1

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n), rejection sampled (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"randint needs n >= 1, got {n}")
        # largest multiple of n that fits in 64 bits
        limit = (_MASK + 1) - ((_MASK + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def normal_pair(self) -> tuple[float, float]:
        """Two independent standard normals via Box-Muller."""
        u1 = 1.0 - self.uniform()  # (0, 1]: log stays finite
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        return r * math.cos(theta), r * math.sin(theta)

    def derive(self, label: str) -> "SeededRng":
        """Independent child stream, deterministic in (seed, label)."""
        h = _FNV_OFFSET
        for b in label.encode("utf-8"):
            h = ((h ^ b) * _FNV_PRIME) & _MASK
        return SeededRng(_mix(self.seed ^ h))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed})"
