"""SplitMix64 stream shared by fixture-weight generation and augmentation.

The generator is pinned bit-for-bit so that fixture assets are identical
across machines and implementations: state advances by the 64-bit golden
gamma, the output is finalized with the standard xor-shift/multiply mix,
and unit-interval draws keep only the top 24 bits.
"""

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator; one `next_u64` per scalar drawn."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        """Draw in [0, 1) from the top 24 bits (exact in binary64)."""
        return (self.next_u64() >> 40) / float(1 << 24)

    def next_in(self, lo: float, hi: float) -> float:
        return lo + self.next_unit() * (hi - lo)
