"""Coding tables over the state interval ``I = {l, ..., b*l - 1}``.

Two builders are provided.  ``build_precise`` merges the ideal positions
``i / q_s`` with a priority queue; ``build_scd`` draws symbols without
replacement from the full multiset using SplitMix64.
"""
from __future__ import annotations

import hashlib
import heapq
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import AlphabetTooLarge, BadDistribution, ValidationError

MAX_WIDTH = 1 << 32
SEED_MASK = (1 << 64) - 1


def _is_power_of_two(v: int) -> bool:
    return v >= 2 and v & (v - 1) == 0


@dataclass(frozen=True)
class SymbolModel:
    """Quantized distribution ``q_s = counts[s] / l`` in base ``b``."""

    b: int
    l: int
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if not _is_power_of_two(self.b):
            raise ValidationError(f"base b={self.b} must be a power of two >= 2")
        L = round(math.log(self.l, self.b)) if self.l > 1 else 0
        if L < 1 or self.b**L != self.l:
            raise ValidationError(f"l={self.l} is not a positive power of b={self.b}")
        if self.l * self.b > MAX_WIDTH:
            raise ValidationError("l*b exceeds the 2**32 state budget")
        if not self.counts:
            raise BadDistribution("empty alphabet")
        if min(self.counts) < 1:
            raise BadDistribution("every symbol needs a count of at least 1")
        if sum(self.counts) != self.l:
            raise BadDistribution(f"counts sum to {sum(self.counts)}, expected l={self.l}")

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def r(self) -> int:
        return self.b.bit_length() - 1

    @property
    def L(self) -> int:
        return (self.l.bit_length() - 1) // self.r

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.l

    def fingerprint(self) -> str:
        blob = struct.pack(f"<IIH{self.n}I", self.b, self.l, self.n, *self.counts)
        return hashlib.sha256(blob).hexdigest()[:16]


def apportion(probs: Sequence, total: int, floor_count: int = 1) -> list[int]:
    """Integer counts ``>= floor_count`` summing to ``total`` that minimise
    ``sum |c_s - p_s * total|``.

    Greedy unit moves on a separable convex objective are optimal; equal
    marginal costs go to the larger ``p_s``, then to the smaller index.
    """
    ps = [Fraction(p) for p in probs]
    if not ps:
        raise BadDistribution("empty distribution")
    if any(p <= 0 for p in ps):
        raise BadDistribution("all probabilities must be positive")
    n = len(ps)
    if n * floor_count > total:
        raise AlphabetTooLarge(f"alphabet of {n} symbols does not fit in total {total}")
    norm = sum(ps)
    targets = [p / norm * total for p in ps]
    counts = [max(floor_count, math.floor(t)) for t in targets]

    def up_cost(s):
        c, t = counts[s], targets[s]
        return abs(c + 1 - t) - abs(c - t)

    def down_cost(s):
        c, t = counts[s], targets[s]
        return abs(c - 1 - t) - abs(c - t)

    while sum(counts) < total:
        s = min(range(n), key=lambda i: (up_cost(i), -ps[i], i))
        counts[s] += 1
    while sum(counts) > total:
        cands = [i for i in range(n) if counts[i] > floor_count]
        s = min(cands, key=lambda i: (down_cost(i), ps[i], i))
        counts[s] -= 1
    return counts


def quantize(probabilities: Sequence, b: int, l: int) -> SymbolModel:
    """Quantize a distribution to counts over ``l`` states (see :func:`apportion`)."""
    if len(probabilities) > l:
        raise AlphabetTooLarge(f"{len(probabilities)} symbols need l >= n, got l={l}")
    return SymbolModel(b, l, tuple(apportion(probabilities, l)))


def quantize_even(probs, b: int, l: int) -> SymbolModel:
    """Quantize with every count even, as the bit-table extension needs."""
    if l % 2:
        raise ValidationError("even counts need an even l")
    half = quantize(probs, b, l // 2)
    return SymbolModel(b, l, tuple(2 * c for c in half.counts))


def check_keyed_constraints(model: SymbolModel) -> None:
    """Parameter guidance for keyed (seeded) tables: b = 2, l > n**2, and
    l > q_s**-2 for every symbol.  No security property is implied."""
    if model.b != 2:
        raise ValidationError("keyed tables require b = 2")
    if model.l <= model.n**2:
        raise ValidationError(f"keyed tables require l > n**2 ({model.l} <= {model.n ** 2})")
    for s, c in enumerate(model.counts):
        # l > (l/c)^2  <=>  c^2 > l
        if c * c <= model.l:
            raise ValidationError(f"keyed tables require l > q_s**-2; symbol {s} has count {c}")


def renorm_meta(model: SymbolModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-symbol ``k_s = -floor(log_b q_s)`` and ``X_s = l_s * b**k_s``."""
    ks, Xs = [], []
    for c in model.counts:
        k = 0
        while c * model.b**k < model.l:
            k += 1
        ks.append(k)
        Xs.append(c * model.b**k)
    return np.asarray(ks, dtype=np.int64), np.asarray(Xs, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class CodecTables:
    """Decoding table ``D[x] = (s, x_s)`` and its inverse ``C(s, x_s)``.

    ``enc`` is one flat array; ``C(s, x_s) = enc[start[s] + x_s]`` for
    ``x_s`` in ``I_s = {l_s, ..., b*l_s - 1}``.
    """

    model: SymbolModel
    dec_sym: np.ndarray
    dec_xs: np.ndarray
    enc: np.ndarray
    start: np.ndarray
    k: np.ndarray
    X: np.ndarray
    init: str = "precise"
    seed: int = 0
    counts_arr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "counts_arr", np.asarray(self.model.counts, dtype=np.int64))
        for name in ("dec_sym", "dec_xs", "enc", "start", "k", "X", "counts_arr"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_order(cls, model: SymbolModel, order: np.ndarray, init: str, seed: int = 0):
        """Enumerate each symbol's states in increasing x starting at ``l_s``."""
        b, l = model.b, model.l
        order = np.asarray(order, dtype=np.int32)
        dec_xs = np.empty(order.shape[0], dtype=np.int64)
        base = np.concatenate(([0], np.cumsum([(b - 1) * c for c in model.counts])))
        start = base[:-1] - np.asarray(model.counts, dtype=np.int64)
        enc = np.empty((b - 1) * l, dtype=np.int64)
        for s, c in enumerate(model.counts):
            where = np.flatnonzero(order == s)
            if where.shape[0] != (b - 1) * c:
                raise ValidationError(f"symbol {s} appears {where.shape[0]} times, expected {(b - 1) * c}")
            xs = c + np.arange(where.shape[0], dtype=np.int64)
            dec_xs[where] = xs
            enc[start[s] + xs] = where + l
        k, X = renorm_meta(model)
        return cls(model, order, dec_xs, enc, start.astype(np.int64), k, X, init, seed)

    @property
    def b(self) -> int:
        return self.model.b

    @property
    def l(self) -> int:
        return self.model.l

    @property
    def n(self) -> int:
        return self.model.n

    def decode(self, x: int) -> tuple[int, int]:
        i = x - self.model.l
        return int(self.dec_sym[i]), int(self.dec_xs[i])

    def encode(self, s: int, xs: int) -> int:
        return int(self.enc[self.start[s] + xs])

    @cached_property
    def lists(self):
        """Plain-list copies for per-step Python loops (numpy scalar access is slow)."""
        return (self.dec_sym.tolist(), self.dec_xs.tolist(), self.enc.tolist(),
                self.start.tolist(), list(self.model.counts))

    def symbol_counters(self) -> np.ndarray:
        """``x_s(x)`` for every ``x`` in I and every ``s``: the number of states
        ``y < x`` with ``D_1(y) = s``, counting the ``l_s`` states below ``l``.
        Shape ``((b-1)*l, n)``."""
        onehot = np.zeros((self.dec_sym.shape[0], self.n), dtype=np.int64)
        onehot[np.arange(self.dec_sym.shape[0]), self.dec_sym] = 1
        before = np.cumsum(onehot, axis=0) - onehot
        return before + self.counts_arr[None, :]

    def matches(self, model: SymbolModel, init: str, seed: int) -> bool:
        """Whether these are the tables ``build_tables(model, init, seed)`` makes."""
        if self.model != model or self.init != init:
            return False
        return init != "scd" or self.seed == seed & SEED_MASK

    def same_as(self, other: "CodecTables") -> bool:
        return (self.model == other.model and np.array_equal(self.dec_sym, other.dec_sym)
                and np.array_equal(self.dec_xs, other.dec_xs))


def build_precise(model: SymbolModel) -> CodecTables:
    """Precise initialization: at each x take the symbol whose next ideal
    position ``i / q_s`` is smallest; ties go to the smaller symbol."""
    # i/q_s = i*l/l_s; scaling every key by lcm(l_s)/l keeps them integral
    lcm = math.lcm(*model.counts)
    steps = [lcm // c for c in model.counts]
    heap = [(steps[s], s) for s in range(model.n)]
    heapq.heapify(heap)
    order = np.empty((model.b - 1) * model.l, dtype=np.int32)
    for i in range(order.shape[0]):
        key, s = heap[0]
        heapq.heapreplace(heap, (key + steps[s], s))
        order[i] = s
    return CodecTables.from_order(model, order, "precise")


def build_scd(model: SymbolModel, seed: int) -> CodecTables:
    """Self-correcting diffusion: symbols drawn without replacement from the
    ``(b-1)*l_s``-copy multiset, slot ``1 + (value mod m)``, swap-with-last."""
    seed &= SEED_MASK
    order = _kernels.scd_order(np.asarray(model.counts, dtype=np.int64), model.b, np.uint64(seed))
    return CodecTables.from_order(model, order, "scd", seed)


def build_tables(model: SymbolModel, init: str = "precise", seed: int = 0) -> CodecTables:
    if init == "precise":
        return build_precise(model)
    if init == "scd":
        return build_scd(model, seed)
    raise ValidationError(f"unknown init {init!r}")


_DUMP_ENTRY = np.dtype([("s", "<u2"), ("xs", "<u4")])


def dump_tables(tables: CodecTables) -> bytes:
    """Little-endian dump: u32 b, u32 l, u16 n, n x u32 counts, then one
    ``(u16 s, u32 x_s)`` entry per state ``x = l .. bl-1``."""
    m = tables.model
    head = struct.pack(f"<IIH{m.n}I", m.b, m.l, m.n, *m.counts)
    entries = np.empty(tables.dec_sym.shape[0], dtype=_DUMP_ENTRY)
    entries["s"] = tables.dec_sym
    entries["xs"] = tables.dec_xs
    return head + entries.tobytes()


def load_tables_dump(blob: bytes) -> tuple[SymbolModel, np.ndarray, np.ndarray]:
    b, l, n = struct.unpack_from("<IIH", blob, 0)
    off = 10
    counts = struct.unpack_from(f"<{n}I", blob, off)
    off += 4 * n
    entries = np.frombuffer(blob, dtype=_DUMP_ENTRY, offset=off, count=(b - 1) * l)
    return SymbolModel(b, l, counts), entries["s"].astype(np.int32), entries["xs"].astype(np.int64)
