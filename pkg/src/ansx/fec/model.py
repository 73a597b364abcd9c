"""Adding a forbidden symbol to a model."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..ans_tables import CodecTables, SymbolModel, apportion
from ..errors import PdTooLarge, ValidationError


@dataclass(frozen=True)
class FecModel:
    """Model whose last symbol (index ``forbidden``) is never encoded.

    With ``p_d = 0`` the base model is used unchanged and ``forbidden`` is None.
    """

    model: SymbolModel
    base: SymbolModel
    forbidden: int | None

    @property
    def l_f(self) -> int:
        return 0 if self.forbidden is None else self.model.counts[self.forbidden]

    @property
    def p_d(self) -> float:
        return self.l_f / self.model.l

    @property
    def allowed(self) -> int:
        return self.base.n

    def forbidden_states(self, tables: CodecTables) -> np.ndarray:
        if self.forbidden is None:
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(tables.dec_sym == self.forbidden) + self.model.l

    def source_entropy(self) -> float:
        p = self.base.probs
        return float(-(p * np.log2(p)).sum())

    def rate(self) -> float:
        """``H' = H - lg(1 - p_d)`` for the quantized model, in bits/symbol."""
        allowed = np.asarray(self.model.counts[: self.allowed], dtype=np.float64) / self.model.l
        return float(-(self.base.probs * np.log2(allowed)).sum())


def rescale_with_forbidden(model: SymbolModel, p_d, even: bool = False) -> FecModel:
    """Scale the allowed counts to about ``(1 - p_d) q_s l`` and give the rest to a
    forbidden symbol appended at the end.  ``even`` keeps every count even, as
    the bit-table extension requires."""
    p_d = Fraction(p_d)
    if p_d == 0:
        if even and any(c % 2 for c in model.counts):
            raise ValidationError("base model has odd counts")
        return FecModel(model, model, None)
    if not 0 < p_d < 1:
        raise ValidationError(f"p_d={float(p_d)} must lie in [0, 1)")
    unit = 2 if even else 1
    total = model.l // unit
    weights = [(1 - p_d) * Fraction(c, model.l) for c in model.counts] + [p_d]
    smallest = min(weights[:-1]) * total
    if smallest < Fraction(1, 2):
        raise PdTooLarge(f"p_d={float(p_d)} leaves a symbol with under half a state "
                         f"(needs {math.ceil(1 / (2 * min(weights[:-1])))} units)")
    counts = [c * unit for c in apportion(weights, total)]
    return FecModel(SymbolModel(model.b, model.l, tuple(counts)), model, model.n)


def spread_uniform(n: int, l: int, spread: float = 0.9, b: int = 2) -> SymbolModel:
    """Model for near-uniform sources whose counts fan out linearly from
    ``(1 - spread) l / n`` to ``(1 + spread) l / n``.

    Equal counts give every symbol the same ``x_s`` range, so a corrupted
    state decoding to another symbol often lands on the very ``x_s`` of the
    correct path and the error merges away undetected.  Distinct counts keep
    those ranges apart at a small rate cost (about ``spread^2 / (6 ln 2)``
    bits per symbol).
    """
    if n < 2:
        raise ValidationError("need at least two symbols")
    if not 0.0 <= spread < 1.0:
        raise ValidationError(f"spread={spread} must lie in [0, 1)")
    u = np.linspace(-1.0, 1.0, n)
    weights = [Fraction(float(1.0 + spread * v)) for v in u]
    return SymbolModel(b, l, tuple(apportion(weights, l)))
