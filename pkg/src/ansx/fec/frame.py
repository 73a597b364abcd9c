"""ANSF frames: a repetition-protected header followed by the raw payload bits.

Header bytes, each bit sent ``REPEAT`` times (least significant bit first)::

    'ANSF' u8 version u8 flags u8 r u32 l u16 n n*u32 counts u32 l_f
    u64 seed u64 symbol_count u32 final_state u16 T ceil(T/8) bytes table
    u64 payload_bits u32 crc32(everything before)

The forbidden symbol is the last of the ``n`` counts; ``l_f`` repeats its count.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..ans_tables import CodecTables, SymbolModel, build_tables
from ..errors import HeaderCorrupt, ValidationError
from ..hardening import BitTable
from ..stream_codec import encode_stream
from .model import FecModel

MAGIC = b"ANSF"
VERSION = 1
REPEAT = 5
FLAG_SCD = 1
FLAG_BIT_TABLE = 4


@dataclass
class FecHeader:
    model: SymbolModel  # forbidden symbol last
    init: str
    seed: int
    symbol_count: int
    final_state: int
    bit_table: BitTable | None  # stored rotated; decoding starts at cell 0
    payload_bits: int

    @property
    def forbidden(self) -> int:
        return self.model.n - 1

    @property
    def l_f(self) -> int:
        return self.model.counts[-1]

    @property
    def p_d(self) -> float:
        return self.l_f / self.model.l

    def initial_bit_table(self) -> BitTable | None:
        if self.bit_table is None:
            return None
        return BitTable.from_seed(len(self.bit_table), self.seed)

    def tables(self) -> CodecTables:
        return build_tables(self.model, self.init, self.seed)

    def to_bytes(self) -> bytes:
        m = self.model
        flags = (FLAG_SCD if self.init == "scd" else 0) | (FLAG_BIT_TABLE if self.bit_table is not None else 0)
        T = len(self.bit_table) if self.bit_table is not None else 0
        blob = b"".join([
            MAGIC, struct.pack("<BBBIH", VERSION, flags, m.r, m.l, m.n),
            struct.pack(f"<{m.n}I", *m.counts), struct.pack("<I", self.l_f),
            struct.pack("<QQIH", self.seed, self.symbol_count, self.final_state, T),
            self.bit_table.pack() if T else b"",
            struct.pack("<Q", self.payload_bits),
        ])
        return blob + struct.pack("<I", zlib.crc32(blob))


def repeat_bits(data: bytes, times: int = REPEAT) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return np.repeat(bits, times)


class _MajorityReader:
    """Decodes repetition-coded header bytes on demand."""

    def __init__(self, bits: np.ndarray):
        self.bits = bits
        self.off = 0
        self.raw = bytearray()

    def take(self, size: int) -> bytes:
        need = size * 8 * REPEAT
        if self.off + need > self.bits.shape[0]:
            raise HeaderCorrupt("frame too short for its header")
        chunk = self.bits[self.off:self.off + need].reshape(-1, REPEAT)
        self.off += need
        votes = (chunk.sum(axis=1) * 2 > REPEAT).astype(np.uint8)
        out = np.packbits(votes, bitorder="little").tobytes()
        self.raw += out
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def parse_frame(bits) -> tuple[FecHeader, np.ndarray]:
    """Majority-decode the header; returns it with the payload bits that follow."""
    bits = np.asarray(bits, dtype=np.uint8)
    rd = _MajorityReader(bits)
    if rd.take(4) != MAGIC:
        raise HeaderCorrupt("frame magic not recognised")
    version, flags, r, l, n = rd.unpack("<BBBIH")
    if version != VERSION or r < 1 or r > 16 or n < 2 or n > 1 << 12:
        raise HeaderCorrupt("implausible header fields")
    counts = rd.unpack(f"<{n}I")
    (l_f,) = rd.unpack("<I")
    seed, count, final_state, T = rd.unpack("<QQIH")
    table_bytes = rd.take((T + 7) // 8) if T else b""
    (payload_bits,) = rd.unpack("<Q")
    crc = zlib.crc32(bytes(rd.raw))
    (stored,) = rd.unpack("<I")
    if crc != stored:
        raise HeaderCorrupt("header checksum mismatch after majority decoding")
    if l_f != counts[-1]:
        raise HeaderCorrupt("forbidden count disagrees with the model")
    try:
        model = SymbolModel(1 << r, l, counts)
    except ValidationError as exc:
        raise HeaderCorrupt(f"header model invalid: {exc}") from exc
    table = BitTable.unpack(table_bytes, T) if T else None
    header = FecHeader(model, "scd" if flags & FLAG_SCD else "precise", seed, count,
                       final_state, table, payload_bits)
    payload = bits[rd.off:rd.off + payload_bits]
    if payload.shape[0] != payload_bits:
        raise HeaderCorrupt("frame shorter than the payload length in its header")
    return header, payload


@dataclass
class FecFrame:
    header: FecHeader
    payload: np.ndarray  # bits in decoder read order

    def bits(self) -> np.ndarray:
        return np.concatenate([repeat_bits(self.header.to_bytes()), self.payload]).astype(np.uint8)

    @property
    def header_bits(self) -> int:
        return len(self.header.to_bytes()) * 8 * REPEAT


def fec_encode(symbols, fec_model: FecModel, *, init: str = "scd", seed: int = 0,
               bit_table_len: int = 32, tables: CodecTables | None = None) -> FecFrame:
    """Encode allowed symbols with the forbidden-symbol model into a binary frame.

    ``tables`` may pass prebuilt tables for ``(model, init, seed)``.
    """
    m = fec_model.model
    if m.b != 2:
        raise ValidationError("correction works on bits; use b = 2")
    if fec_model.forbidden is None:
        raise ValidationError("model has no forbidden symbol (p_d = 0)")
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= fec_model.allowed):
        raise ValidationError("message contains a symbol outside the allowed alphabet")
    if tables is None:
        tables = build_tables(m, init, seed)
    elif not tables.matches(m, init, seed):
        raise ValidationError("prebuilt tables do not match the model, init and seed")
    initial = BitTable.from_seed(bit_table_len, seed) if bit_table_len else None
    enc = encode_stream(arr, tables, bit_table=initial)
    payload = enc.digits.digits.astype(np.uint8)
    header = FecHeader(m, init, seed, len(arr), enc.final_x,
                       enc.bit_table, int(payload.shape[0]))
    return FecFrame(header, payload)


def pack_bits(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def unpack_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
