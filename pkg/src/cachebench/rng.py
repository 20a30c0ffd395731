"""64-bit generators shared bit-for-bit by the Python and compiled engines.

xorshift64* drives replacement and random-fill choices; splitmix64 derives
independent stream seeds from one run seed.
"""

from __future__ import annotations

import math
import zlib

MASK64 = (1 << 64) - 1
_XS_MULT = 0x2545F4914F6CDD1D
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Seed for stream ``stream`` of a run seeded with ``seed``; never zero."""
    s = splitmix64((seed & MASK64) ^ splitmix64(stream & MASK64))
    return s or _GOLDEN


def stable_hash(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


class XorShift64Star:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = (seed & MASK64) or _GOLDEN

    def next(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _XS_MULT) & MASK64

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by multiply-shift on the top 32 bits."""
        return ((self.next() >> 32) * n) >> 32


_INV53 = 1.0 / 9007199254740992.0
_TAU = 6.283185307179586


def gauss(rng: XorShift64Star) -> float:
    """Standard normal by Box-Muller (cosine branch only, two draws per value)."""
    u1 = ((rng.next() >> 11) + 1) * _INV53
    u2 = (rng.next() >> 11) * _INV53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TAU * u2)
