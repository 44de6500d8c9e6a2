"""Portable seeded randomness.

Every stochastic choice in the pipeline goes through :class:`SplitMix64`, a
fixed 64-bit generator, so that outputs are reproducible bit-for-bit across
runs, platforms, and reimplementations. The algorithm:

    state = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

Derived draws are specified here, not left to a standard library:

* ``below(n)``  -> ``next_u64() % n``
* ``uniform()`` -> ``(next_u64() >> 11) / 2^53``
* ``shuffle``   -> Fisher-Yates from the last index down, partner drawn
  with ``below(i + 1)``
"""

from __future__ import annotations

from typing import List, Sequence, TypeVar

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


class SplitMix64:
    """Deterministic 64-bit generator with a tiny, documented state space."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Integer in [0, n). The modulo bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError(f"below() needs a positive bound, got {n}")
        return self.next_u64() % n

    def uniform(self) -> float:
        """Float in [0, 1) with 53 bits of mantissa."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.below(len(seq))]

    def shuffle(self, items: List[T]) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq: Sequence[T], k: int) -> List[T]:
        """k distinct items, order given by the shuffle prefix."""
        if k < 0 or k > len(seq):
            raise ValueError(f"cannot sample {k} of {len(seq)} items")
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]


def derive_seed(seed: int, *parts: int | str) -> int:
    """Mix extra context (indices, names) into a base seed, deterministically.

    Strings fold in via their UTF-8 bytes; the mixing reuses the splitmix
    output function so two different part tuples land far apart.
    """
    acc = seed & _MASK
    rng = SplitMix64(acc)
    for part in parts:
        if isinstance(part, str):
            for b in part.encode("utf-8"):
                rng._state = (rng._state ^ b) & _MASK
                acc = rng.next_u64()
        else:
            rng._state = (rng._state ^ (part & _MASK)) & _MASK
            acc = rng.next_u64()
    return acc
