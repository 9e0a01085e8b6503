"""Fixed 64-bit linear congruential generator for sampled checks.

Sampled runs must be bit-reproducible across platforms, so sampling never
touches the stdlib or numpy generators: this is x -> (a*x + c) mod 2^64 with
Knuth's MMIX constants, and indices are drawn from the top bits.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407


class Lcg64:
    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next64(self) -> int:
        self.state = (self.state * MULTIPLIER + INCREMENT) & MASK64
        return self.state

    def below(self, n: int) -> int:
        """An index in [0, n). Top bits of the state, reduced mod n."""
        return (self.next64() >> 33) % n

    def indices(self, count: int, n: int) -> list[int]:
        return [self.below(n) for _ in range(count)]
