"""Deterministic counter-based random streams.

Every new publication gets its own substream derived from (run seed,
node id), so reference lists can be built in any order, or in parallel,
with bit-stable output. The generator is a SplitMix-style additive
counter with a 64-bit avalanche mix; the pure-Python implementation here
is arithmetic-identical to the compiled kernel in ``_kernels``.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# 2**-53, so a 53-bit mantissa maps to [0, 1)
_U53 = 2.0**-53


def mix64(z: int) -> int:
    """64-bit finalizer (murmur-style avalanche) used by all streams."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


class RngStream:
    """Seeded substream: identical (seed, substream) gives identical draws.

    The stream state advances by a per-stream odd gamma; outputs pass
    through :func:`mix64`. Thread scheduling cannot affect the sequence
    because each stream is self-contained.
    """

    __slots__ = ("_state", "_gamma")

    def __init__(self, seed: int, substream: int) -> None:
        s0 = mix64((seed + GOLDEN * (substream + 1)) & MASK64)
        self._state = s0
        self._gamma = mix64(s0 ^ GOLDEN) | 1

    def next_u64(self) -> int:
        self._state = (self._state + self._gamma) & MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """Draw in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _U53

    def randbelow(self, n: int) -> int:
        """Draw an integer in [0, n). Requires n >= 1."""
        j = int(self.uniform() * n)
        return n - 1 if j >= n else j
