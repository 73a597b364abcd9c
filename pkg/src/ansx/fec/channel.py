"""Binary symmetric channel driven by SplitMix64."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import _kernels
from ..errors import ValidationError


@dataclass(frozen=True)
class ChannelSpec:
    p_b: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_b < 0.5:
            raise ValidationError(f"p_b={self.p_b} must lie in [0, 0.5)")


def flip_threshold(p_b: float) -> int:
    """Draws below this 64-bit value flip the bit."""
    return int(Fraction(p_b) * (1 << 64))


def bsc_corrupt(bits, channel: ChannelSpec) -> np.ndarray:
    """Flip each bit independently; draw ``i`` of the seeded stream decides bit ``i``."""
    arr = np.asarray(bits, dtype=np.uint8)
    if channel.p_b == 0.0 or arr.size == 0:
        return arr.copy()
    draws = _kernels.splitmix_stream(np.uint64(channel.seed & ((1 << 64) - 1)), arr.size)
    flips = draws < np.uint64(flip_threshold(channel.p_b))
    return arr ^ flips.astype(np.uint8)
