"""Output hardening around the stream coder.

Two independent layers, usable separately or together:

* ``MaskList``: each coding step XORs its transferred digit block with the
  next mask of a cyclic list; the decoder walks the list backwards.
* ``BitTable``: after the digit transfer the youngest state bit is swapped
  with a cell of a cyclic bit table, enlarging the coder state by ``T`` bits.
  Requires every ``l_s`` to be even so the swap stays inside ``I_s``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .ans_tables import CodecTables
from .errors import OddCounts, OutOfDigits, ValidationError
from .prng import SplitMix64

_BIT_TABLE_SALT = 0xB17AB1E5EED5A175
_MASK_SALT = 0x3A5C0FFEE0DDF00D


def mask_width(tables: CodecTables) -> int:
    """Bits per mask: enough for the longest digit block, ``max k_s`` digits."""
    return max(1, int(tables.k.max())) * tables.model.r


class MaskList:
    def __init__(self, masks: Sequence[int], width: int, index: int = 0):
        if len(masks) == 0:
            raise ValidationError("mask list must be non-empty")
        if not 1 <= width <= 32:
            raise ValidationError(f"mask width {width} outside 1..32")
        self.width = width
        self.masks = np.asarray([int(m) & ((1 << width) - 1) for m in masks], dtype=np.int64)
        self.index = index % len(self.masks)

    def __len__(self) -> int:
        return int(self.masks.shape[0])

    @classmethod
    def from_seed(cls, seed: int, count: int, width: int) -> "MaskList":
        rng = SplitMix64(seed ^ _MASK_SALT)
        return cls([rng.next() for _ in range(count)], width)

    @classmethod
    def alternating(cls, width: int) -> "MaskList":
        """The NOT-every-second-step scheme: masks 0...0 and 1...1."""
        return cls([0, (1 << width) - 1], width)

    def next_encode(self) -> int:
        m = int(self.masks[self.index])
        self.index = (self.index + 1) % len(self)
        return m

    def next_decode(self) -> int:
        self.index = (self.index - 1) % len(self)
        return int(self.masks[self.index])

    def for_decoding(self, steps: int) -> "MaskList":
        """A copy positioned where an encoder starting here stops after ``steps``."""
        return MaskList(self.masks, self.width, self.index + steps)


class BitTable:
    def __init__(self, bits: Sequence[int], pos: int = 0):
        if len(bits) < 1:
            raise ValidationError("bit table needs at least one cell")
        self.bits = [int(v) & 1 for v in bits]
        self.pos = pos % len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, BitTable) and self.bits == other.bits and self.pos == other.pos

    def __repr__(self) -> str:
        return f"BitTable(T={len(self)}, pos={self.pos})"

    @classmethod
    def from_seed(cls, T: int, seed: int) -> "BitTable":
        return cls(SplitMix64(seed ^ _BIT_TABLE_SALT).bits(T))

    def copy(self) -> "BitTable":
        return BitTable(self.bits, self.pos)

    def swap_encode(self, x: int) -> int:
        i = self.pos
        self.bits[i], x = x & 1, (x & ~1) | self.bits[i]
        self.pos = (i + 1) % len(self.bits)
        return x

    def swap_decode(self, x: int) -> int:
        self.pos = (self.pos - 1) % len(self.bits)
        i = self.pos
        self.bits[i], x = x & 1, (x & ~1) | self.bits[i]
        return x

    def rotated(self) -> "BitTable":
        """Same cyclic contents re-indexed so the current position is 0."""
        T = len(self.bits)
        return BitTable([self.bits[(j + self.pos) % T] for j in range(T)])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.uint8)

    def pack(self) -> bytes:
        return np.packbits(self.as_array(), bitorder="little").tobytes()

    @classmethod
    def unpack(cls, data: bytes, T: int) -> "BitTable":
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")[:T]
        return cls(bits.tolist())


def require_even(tables: CodecTables) -> None:
    odd = [s for s, c in enumerate(tables.model.counts) if c % 2]
    if odd:
        raise OddCounts(f"bit-table extension needs even l_s; odd for symbols {odd}")


def encode_step(x: int, s: int, tables: CodecTables, out: list,
                masks: MaskList | None = None, bit_table: BitTable | None = None) -> int:
    """One encoder step with optional masking and bit-table swap.

    Digits are appended to ``out`` least significant first.
    """
    _, _, enc, start, counts = tables.lists
    b, r = tables.model.b, tables.model.r
    upper = counts[s] * b
    y, j = x, 0
    while y >= upper:
        y >>= r
        j += 1
    block = x - (y << (r * j))
    if masks is not None:
        block ^= masks.next_encode() & ((1 << (r * j)) - 1)
    for _ in range(j):
        out.append(block & (b - 1))
        block >>= r
    if bit_table is not None:
        y = bit_table.swap_encode(y)
    return enc[start[s] + y]


def decode_step(x: int, tables: CodecTables, digits: Sequence[int], pos: int,
                masks: MaskList | None = None,
                bit_table: BitTable | None = None) -> tuple[int, int, int]:
    """Mirror of :func:`encode_step`; returns ``(x, s, pos)``."""
    dec_sym, dec_xs, *_ = tables.lists
    l, r = tables.model.l, tables.model.r
    s, xs = dec_sym[x - l], dec_xs[x - l]
    if bit_table is not None:
        xs = bit_table.swap_decode(xs)
    j, y = 0, xs
    while y < l:
        y <<= r
        j += 1
    if pos + j > len(digits):
        raise OutOfDigits(f"stream ended at digit {len(digits)} while {j} more were needed")
    v = 0
    for i in range(j):
        v = (v << r) | int(digits[pos + i])
    if masks is not None:
        v ^= masks.next_decode() & ((1 << (r * j)) - 1)
    return (xs << (r * j)) | v, s, pos + j


def masked_encode_step(x, s, tables, masks, out):
    return encode_step(x, s, tables, out, masks=masks)


def masked_decode_step(x, tables, masks, digits, pos):
    return decode_step(x, tables, digits, pos, masks=masks)


def extended_encode_step(x, s, tables, bit_table, out):
    require_even(tables)
    return encode_step(x, s, tables, out, bit_table=bit_table)


def extended_decode_step(x, tables, bit_table, digits, pos):
    require_even(tables)
    return decode_step(x, tables, digits, pos, bit_table=bit_table)
