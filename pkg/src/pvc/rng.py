"""splitmix64, the shared deterministic RNG.

Every seeded feature (simulated fleets, interleaving drivers) draws from
this generator so that native and browser implementations can reproduce
each other bit for bit.  Keep the algorithm frozen: the browser worker
carries a BigInt port of exactly these steps.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4B7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit splitmix generator (Steele et al. finalizer)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def below(self, n: int) -> int:
        """Uniform-ish integer in [0, n). Modulo bias is acceptable here;
        what matters is that every port computes the same value."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return self.next_u64() % n

    def unit(self) -> float:
        """Float in [0, 1) built from the top 53 bits; exact in IEEE doubles."""
        return (self.next_u64() >> 11) / 9007199254740992.0

    def signed_unit(self) -> float:
        """Float in [-1, 1)."""
        return self.unit() * 2.0 - 1.0


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; used for content hashes and trace digests."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def fnv1a64_hex(data: bytes) -> str:
    return format(fnv1a64(data), "016x")
