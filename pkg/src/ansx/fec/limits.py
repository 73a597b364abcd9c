"""Redundancy thresholds for forbidden-symbol correction and the weight-drop roots.

``P_a`` (probability that a decoder step reads ``a`` bits) is passed as
``None`` for the constant-length approximation ``P_{H'} = 1``, as a mapping
``{a: P_a}``, or as a callable ``p_d -> mapping`` when it depends on ``p_d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Union

from scipy.optimize import brentq, minimize_scalar

from ..analysis import binary_entropy
from ..errors import NoConvergence, NoNegativeRoot, ValidationError

BlockLengths = Union[None, Mapping[int, float], Callable[[float], Mapping[int, float]]]
LG_E = 1.0 / math.log(2.0)


def _check_pb(p_b: float) -> None:
    if not 0.0 < p_b < 0.5:
        raise ValidationError(f"p_b={p_b} must lie in (0, 0.5)")


def _check_pd(p_d: float) -> None:
    if not 0.0 < p_d < 1.0:
        raise ValidationError(f"p_d={p_d} must lie in (0, 1)")


def shannon_redundancy(p_b: float) -> float:
    """Minimal redundancy per transmitted bit, ``h / (1 - h)``."""
    h = binary_entropy(p_b)
    return h / (1.0 - h)


def pd0(p_b: float, H: float = 1.0) -> float:
    _check_pb(p_b)
    return 1.0 - 2.0 ** (-H * shannon_redundancy(p_b))


def practical_exponent(p_b: float) -> float:
    """``max_p h(p) - lg(e) (p - p_b)^2 / (2 p_b (1 - p_b))``; the maximum sits a bit above p_b."""
    _check_pb(p_b)
    k = LG_E / (2.0 * p_b * (1.0 - p_b))
    res = minimize_scalar(lambda p: -(binary_entropy(p) - k * (p - p_b) ** 2),
                          bounds=(p_b, 0.5), method="bounded",
                          options={"xatol": 1e-14, "maxiter": 500})
    return -float(res.fun)


def pd1(p_b: float, H: float = 1.0) -> float:
    m = practical_exponent(p_b)
    return 1.0 - 2.0 ** (-H * m / (1.0 - m))


def sqrt_sum(p_b: float) -> float:
    return math.sqrt(p_b) + math.sqrt(1.0 - p_b)


def pd2_single_block(p_b: float) -> float:
    """``p_d^2`` when every step reads exactly one bit (``H' = 1``)."""
    _check_pb(p_b)
    return 1.0 - sqrt_sum(p_b) ** -2


def pd2_constant_length(p_b: float, H: float = 1.0) -> float:
    """``p_d^2`` with all blocks of length ``H'``, solved in closed form."""
    _check_pb(p_b)
    g = 2.0 * math.log2(sqrt_sum(p_b))
    return 1.0 - 2.0 ** (-H * g / (1.0 - g))


def _resolve(P_a: BlockLengths, p_d: float, H: float) -> Mapping[float, float] | None:
    if P_a is None:
        return None
    return P_a(p_d) if callable(P_a) else P_a


def _moment(P: Mapping, base: float) -> float:
    return math.fsum(w * base**a for a, w in P.items())


def pd2(p_b: float, H: float = 1.0, P_a: BlockLengths = None, tol: float = 1e-14,
        max_iter: int = 500) -> float:
    """``p_d^2``: ``(1 - p_d)^{-1/2} = sum_a P_a (sqrt p_b + sqrt(1-p_b))^a``.

    A ``P_a`` that depends on ``p_d`` is handled by fixed-point iteration
    started from the constant-length value.
    """
    start = pd2_constant_length(p_b, H)
    if P_a is None:
        return start
    if not callable(P_a):
        return 1.0 - _moment(P_a, sqrt_sum(p_b)) ** -2
    p = start
    for _ in range(max_iter):
        nxt = 1.0 - _moment(P_a(p), sqrt_sum(p_b)) ** -2
        if abs(nxt - p) <= tol:
            return nxt
        p = nxt
    raise NoConvergence(f"p_d^2 fixed point did not settle (last step {abs(nxt - p):.3g})")


@dataclass(frozen=True)
class Thresholds:
    pd0: float
    pd1: float
    pd2: float

    def overhead(self, H: float = 1.0) -> tuple[float, float, float]:
        """``H'/H`` at each threshold."""
        return tuple(1.0 - math.log2(1.0 - p) / H for p in (self.pd0, self.pd1, self.pd2))


def thresholds(p_b: float, H: float = 1.0, P_a: BlockLengths = None) -> Thresholds:
    if H <= 0:
        raise ValidationError("H must be positive")
    return Thresholds(pd0(p_b, H), pd1(p_b, H), pd2(p_b, H, P_a))


def _drop_equation(p_b: float, p_d: float, P: Mapping | None, H: float):
    """``F(v) = ln sum_a P_a (p_b^{v+1} + q_b^{v+1})^a - v ln(1 - p_d)``."""
    q_b, q_d = 1.0 - p_b, 1.0 - p_d
    ln_pb, ln_qb, ln_qd = math.log(p_b), math.log(q_b), math.log(q_d)
    if P is None:
        P = {H - math.log2(q_d): 1.0}

    def F(v: float) -> float:
        inner = math.exp((v + 1) * ln_pb) + math.exp((v + 1) * ln_qb)
        return math.log(math.fsum(w * inner**a for a, w in P.items())) - v * ln_qd

    mean_a = math.fsum(a * w for a, w in P.items())
    slope0 = mean_a * (p_b * ln_pb + q_b * ln_qb) - ln_qd
    return F, slope0


def drop_root_v(p_b: float, p_d: float, P_a: BlockLengths = None, H: float = 1.0,
                xtol: float = 1e-13) -> float:
    """Negative root of ``(1-p_d)^v = sum_a P_a (p_b^{v+1} + (1-p_b)^{v+1})^a``.

    ``F(v)`` is convex with ``F(0) = 0``, so a negative root exists iff
    ``F'(0) > 0``.  Bisection runs on ``G(v) = F(v) / v`` (with ``G(0) = F'(0)``),
    which is positive between the root and 0 and negative below it.
    """
    _check_pb(p_b)
    _check_pd(p_d)
    F, slope0 = _drop_equation(p_b, p_d, _resolve(P_a, p_d, H), H)
    if slope0 <= 0:
        raise NoNegativeRoot(f"p_d={p_d} is at or below the Shannon threshold; only v = 0 solves")
    lo = -8.0
    while F(lo) <= 0:
        lo *= 2
        if lo < -1e6:
            raise NoNegativeRoot("negative root lies beyond the search range")
    hi = 0.0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        g = slope0 if mid == 0.0 else F(mid) / mid
        if g > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def solve_u(p_b: float, p_d: float, P_a: BlockLengths = None, H: float = 1.0) -> float:
    """Smaller root of ``(1-p_d)^{u-1} = sum_a P_a (p_b^u + (1-p_b)^u)^a`` (the
    other root is ``u = 1``), found by bracketing and Brent's method."""
    _check_pb(p_b)
    _check_pd(p_d)
    P = _resolve(P_a, p_d, H)
    q_b, q_d = 1.0 - p_b, 1.0 - p_d
    if P is None:
        P = {H - math.log2(q_d): 1.0}

    def K(u: float) -> float:
        inner = p_b**u + q_b**u
        return math.log(math.fsum(w * inner**a for a, w in P.items())) - (u - 1) * math.log(q_d)

    hi = 1.0 - 1e-6
    if K(hi) >= 0:
        raise NoNegativeRoot("no root below u = 1")
    lo, step = hi, 0.05
    while K(lo) < 0:
        lo -= step
        step *= 2
        if lo < -1e6:
            raise NoNegativeRoot("root u lies beyond the search range")
    return brentq(K, lo, hi, xtol=1e-15, maxiter=500)


def expected_tree_width_finite(p_b: float, p_d: float, P_a: BlockLengths = None,
                               H: float = 1.0) -> tuple[bool, float]:
    v = drop_root_v(p_b, p_d, P_a, H)
    return v < -0.5, v


def ideal_block_lengths(source_probs, b: int = 2, frequencies=None) -> Callable[[float], dict]:
    """``P_a`` as a function of ``p_d`` for symbols coded at ``(1 - p_d) q_s``.

    A symbol moves ``k_s - 1`` digits with probability ``c_s`` and ``k_s``
    otherwise, ``c_s`` being the fractional part of ``log_b`` of its probability.
    Lengths are in bits (``r`` per digit).  ``frequencies`` gives how often each
    symbol actually occurs (normalised here) when that differs from the model
    ``source_probs``.
    """
    r = b.bit_length() - 1
    probs = [float(p) for p in source_probs]
    freqs = probs if frequencies is None else [float(f) for f in frequencies]
    if len(freqs) != len(probs):
        raise ValidationError("frequencies and probabilities differ in length")
    total = sum(freqs)
    if total <= 0:
        raise ValidationError("frequencies must not all be zero")
    freqs = [f / total for f in freqs]

    def P_a(p_d: float) -> dict:
        out: dict[int, float] = {}
        for pi, fi in zip(probs, freqs):
            q = (1.0 - p_d) * pi
            k = math.ceil(-math.log(q, b) - 1e-12)
            c = math.log(q * b**k, b)
            for a, w in ((k - 1, c), (k, 1.0 - c)):
                if w > 0 and fi > 0:
                    out[a * r] = out.get(a * r, 0.0) + fi * w
        return out

    return P_a
