"""ANS1 container: a self-describing little-endian file around one stream.

Layout::

    'ANS1' u8 version u8 flags u8 r u32 l u16 n n*u32 counts
    u64 seed u64 symbol_count u32 final_state
    [flags bit1]  u32 mask_count, mask_count*u32 masks
    [flags bit2]  u16 table_len, ceil(table_len/8) bytes of packed bits
    u64 payload_bit_length, payload bytes

Flags: bit0 ScD tables, bit1 masks, bit2 bit table.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .ans_tables import CodecTables, SymbolModel, build_tables
from .digits import DigitBuffer
from .errors import BadMagic, OutOfDigits, ValidationError
from .hardening import BitTable

MAGIC = b"ANS1"
VERSION = 1
FLAG_SCD = 1
FLAG_MASKS = 2
FLAG_BIT_TABLE = 4


@dataclass
class Container:
    model: SymbolModel
    init: str
    seed: int
    symbol_count: int
    final_state: int
    payload: DigitBuffer
    masks: np.ndarray | None = None
    bit_table: BitTable | None = None

    @property
    def flags(self) -> int:
        f = FLAG_SCD if self.init == "scd" else 0
        if self.masks is not None:
            f |= FLAG_MASKS
        if self.bit_table is not None:
            f |= FLAG_BIT_TABLE
        return f

    def tables(self) -> CodecTables:
        return build_tables(self.model, self.init, self.seed)

    def to_bytes(self) -> bytes:
        m = self.model
        parts = [MAGIC, struct.pack("<BBBIH", VERSION, self.flags, m.r, m.l, m.n),
                 struct.pack(f"<{m.n}I", *m.counts),
                 struct.pack("<QQI", self.seed if self.init == "scd" else 0,
                             self.symbol_count, self.final_state)]
        if self.masks is not None:
            masks = np.asarray(self.masks, dtype="<u4")
            parts += [struct.pack("<I", masks.shape[0]), masks.tobytes()]
        if self.bit_table is not None:
            if len(self.bit_table) >= 1 << 16:
                raise ValidationError("bit table longer than 65535 cells")
            parts += [struct.pack("<H", len(self.bit_table)), self.bit_table.pack()]
        parts += [struct.pack("<Q", self.payload.bit_length), self.payload.pack()]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Container":
        reader = _Reader(blob)
        if reader.take(4) != MAGIC:
            raise BadMagic("not an ANS1 container")
        version, flags, r, l, n = reader.unpack("<BBBIH")
        if version != VERSION:
            raise BadMagic(f"unsupported container version {version}")
        if not 1 <= r <= 16:
            raise ValidationError(f"bad digit width r={r}")
        counts = reader.unpack(f"<{n}I")
        seed, count, final_state = reader.unpack("<QQI")
        model = SymbolModel(1 << r, l, counts)
        masks = None
        if flags & FLAG_MASKS:
            (mc,) = reader.unpack("<I")
            masks = np.frombuffer(reader.take(4 * mc), dtype="<u4").astype(np.uint32)
        table = None
        if flags & FLAG_BIT_TABLE:
            (T,) = reader.unpack("<H")
            table = BitTable.unpack(reader.take((T + 7) // 8), T)
        (bits,) = reader.unpack("<Q")
        if bits % r:
            raise ValidationError("payload bit length is not a whole number of digits")
        payload = DigitBuffer.unpack(reader.take((bits + 7) // 8), r, bits)
        init = "scd" if flags & FLAG_SCD else "precise"
        return cls(model, init, seed, count, final_state, payload, masks, table)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.off = 0

    def take(self, size: int) -> bytes:
        if self.off + size > len(self.blob):
            raise OutOfDigits("container truncated")
        out = self.blob[self.off:self.off + size]
        self.off += size
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))
