"""Deterministic random numbers.

A SplitMix64 generator backs every stochastic choice in the package (splits,
weight init, shuffles, dropout masks) so results reproduce bit-for-bit across
platforms and runs. Streams are derived by hashing a seed with integer tags,
which gives independent, order-free substreams: ``derive(seed, epoch, batch)``
names one dropout mask regardless of execution order.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One SplitMix64 output for the given state."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive(seed: int, *tags: int) -> int:
    """Mix a seed with integer tags into a new stream seed."""
    state = splitmix64(seed & _MASK)
    for tag in tags:
        state = splitmix64((state ^ (tag & _MASK)) & _MASK)
    return state


class Rng:
    """Sequential SplitMix64 stream."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, n: int) -> int:
        """Unbiased integer in [0, n)."""
        if n <= 0:
            raise ValueError("randint needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def choice(self, items):
        return items[self.randint(len(items))]

    def normal(self) -> float:
        """Standard normal via Box-Muller."""
        u1 = max(self.uniform(), 1e-300)
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
