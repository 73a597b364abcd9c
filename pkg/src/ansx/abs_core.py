"""Asymmetric binary system: closed-form two-symbol coding in fixed point.

The probability of symbol 1 is ``q = f / 2**P``.  Every ceiling and floor is
evaluated on integers, so results are bit-exact on any platform.  The
functions accept plain ints or numpy ``uint64`` arrays; the array path is used
for exhaustive checks and must keep ``x * 2**P`` below ``2**64``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError

MAX_STATE = (1 << 32) - 1


class AbsVariant(enum.Enum):
    CEILING = "ceiling"
    FLOOR = "floor"


@dataclass(frozen=True)
class BinaryProb:
    """Probability of a ``1`` as the dyadic fraction ``f / 2**P``."""

    f: int
    P: int = 32

    def __post_init__(self):
        if not 1 <= self.P <= 32:
            raise ValidationError(f"precision P={self.P} outside 1..32")
        if not 0 < self.f < (1 << self.P):
            raise ValidationError(f"f={self.f} must lie strictly inside (0, 2**{self.P})")

    @classmethod
    def from_float(cls, q: float | Fraction, P: int = 32) -> "BinaryProb":
        # Truncation, not rounding: floor(0.3 * 2**32) is what reproduces the
        # q = 0.3 worked table (rounding up shifts the jump at x = 10).
        f = math.floor(Fraction(q) * (1 << P))
        return cls(min(max(f, 1), (1 << P) - 1), P)

    @property
    def q(self) -> float:
        return self.f / (1 << self.P)


def _select(cond, a, b):
    if isinstance(cond, np.ndarray):
        return np.where(cond, a, b)
    return a if cond else b


def _check_state(x) -> None:
    if isinstance(x, np.ndarray):
        if x.size and int(x.max()) > MAX_STATE:
            raise ValidationError("state exceeds 2**32 - 1")
    elif not 0 <= x <= MAX_STATE:
        raise ValidationError(f"state {x} outside 0..2**32-1")


def abs_decode(x, q: BinaryProb, variant: AbsVariant = AbsVariant.CEILING):
    """Split state ``x`` into ``(s, x_s)``.

    Ceiling variant: ``s = ceil((x+1)q) - ceil(xq)``; ``x_1 = ceil(xq)`` and
    ``x_0 = x - ceil(xq)``.  The floor variant swaps ceil for floor.
    """
    _check_state(x)
    one = 1 << q.P
    if variant is AbsVariant.CEILING:
        lo = (x * q.f + (one - 1)) >> q.P
        hi = ((x + 1) * q.f + (one - 1)) >> q.P
    else:
        lo = x * q.f >> q.P
        hi = (x + 1) * q.f >> q.P
    s = hi - lo
    return s, _select(s == 1, lo, x - lo)


def abs_encode(s, xs, q: BinaryProb, variant: AbsVariant = AbsVariant.CEILING):
    """Inverse of :func:`abs_decode`: the state that decodes to ``(s, xs)``."""
    _check_state(xs)
    one = 1 << q.P
    f, g = q.f, one - q.f
    if variant is AbsVariant.CEILING:
        # s=0: ceil((xs+1)/(1-q)) - 1      s=1: floor(xs/q)
        x0 = ((xs + 1) * one + (g - 1)) // g - 1
        x1 = (xs * one) // f
    else:
        # s=0: floor(xs/(1-q))              s=1: ceil((xs+1)/q) - 1
        x0 = (xs * one) // g
        x1 = ((xs + 1) * one + (f - 1)) // f - 1
    return _select(s == 1, x1, x0)
