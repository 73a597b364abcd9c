"""SplitMix64, the generator behind every seeded choice in ansx."""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def prng_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns ``(new_state, value)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return state, z ^ (z >> 31)


def index_in(value: int, m: int) -> int:
    """Map a 64-bit draw onto the 1-based slot range ``1..m``."""
    return 1 + value % m


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state, value = prng_next(self.state)
        return value

    def below(self, m: int) -> int:
        """0-based index in ``range(m)``."""
        return self.next() % m

    def bits(self, count: int) -> list[int]:
        return [self.next() & 1 for _ in range(count)]
