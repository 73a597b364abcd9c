"""Stream coding over fixed tables.

The state ``x`` lives in ``I = {l, ..., b*l - 1}``.  Before coding ``s`` the
encoder moves the youngest base-``b`` digits out until ``x`` lands in
``I_s = {l_s, ..., b*l_s - 1}``; the decoder pulls them back after ``D(x)``.

Messages are encoded back to front starting from ``x = l`` and the digit
sequence is reversed once, so decoding runs forward and ends in ``x = l``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .ans_tables import CodecTables
from .digits import DigitBuffer
from .errors import ModelMismatch, OutOfDigits, TerminalStateMismatch, ValidationError
from .hardening import BitTable, MaskList, decode_step, encode_step, require_even

_EMPTY_MASKS = np.zeros(0, dtype=np.int64)
_EMPTY_TABLE = np.zeros(0, dtype=np.uint8)


@dataclass(frozen=True)
class StreamState:
    x: int
    pos: int = 0


def encode_symbol(state: StreamState, s: int, tables: CodecTables, out: list) -> StreamState:
    """Transfer digits of ``state.x`` into ``out`` (least significant first), then apply C."""
    before = len(out)
    x = encode_step(state.x, s, tables, out)
    return StreamState(x, state.pos + len(out) - before)


def decode_symbol(state: StreamState, tables: CodecTables,
                  digits: Sequence[int]) -> tuple[StreamState, int]:
    x, s, pos = decode_step(state.x, tables, digits, state.pos)
    return StreamState(x, pos), s


def digits_for_step(tables: CodecTables, s: int, x: int) -> int:
    """Digits moved when coding ``s`` from state ``x``: ``k_s - [x < X_s]``."""
    return int(tables.k[s]) - int(x < tables.X[s])


def _mask_array(masks: MaskList | None) -> np.ndarray:
    if masks is None:
        return _EMPTY_MASKS
    return np.roll(masks.masks, -masks.index).astype(np.int64)


def _check_symbols(symbols, n: int) -> np.ndarray:
    arr = np.ascontiguousarray(symbols, dtype=np.int64)
    if arr.ndim != 1:
        raise ValidationError("symbols must be one-dimensional")
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValidationError(f"symbol outside alphabet 0..{n - 1}")
    return arr


@dataclass
class EncodedStream:
    final_x: int
    digits: DigitBuffer
    symbol_count: int
    bit_table: BitTable | None = None  # rotated so decoding starts at position 0


def encode_stream(symbols, tables: CodecTables, *, masks: MaskList | None = None,
                  bit_table: BitTable | None = None, initial_x: int | None = None) -> EncodedStream:
    """Encode with optional hardening layers.  ``bit_table`` is not modified."""
    m = tables.model
    arr = _check_symbols(symbols, m.n)
    x0 = m.l if initial_x is None else int(initial_x)
    if not m.l <= x0 < m.b * m.l:
        raise ValidationError(f"initial state {x0} outside I")
    table = _EMPTY_TABLE
    if bit_table is not None:
        require_even(tables)
        table = bit_table.rotated().as_array().copy()
    x, digits = _kernels.encode(arr, tables.enc, tables.start, tables.counts_arr, m.r, m.l,
                                x0, _mask_array(masks), table)
    stored = None
    if bit_table is not None:
        stored = BitTable(table.tolist(), pos=len(arr)).rotated()
    return EncodedStream(int(x), DigitBuffer(digits[::-1], m.r), len(arr), stored)


def decode_stream(final_x: int, digits: DigitBuffer, count: int, tables: CodecTables, *,
                  masks: MaskList | None = None, bit_table: BitTable | None = None,
                  expected_bit_table: BitTable | None = None,
                  terminal_x: int | None = None) -> np.ndarray:
    """Decode ``count`` symbols and verify the terminal state.

    ``masks`` is positioned where the encoder started; ``bit_table`` is the
    stored (rotated) table and ``expected_bit_table`` the encoder's initial one.
    """
    m = tables.model
    if not m.l <= final_x < m.b * m.l:
        raise TerminalStateMismatch(f"stored final state {final_x} outside I")
    table = _EMPTY_TABLE
    if bit_table is not None:
        require_even(tables)
        table = bit_table.rotated().as_array().copy()
    out, x, pos, status = _kernels.decode(int(final_x), digits.digits.astype(np.int64), int(count),
                                          tables.dec_sym, tables.dec_xs, m.r, m.l,
                                          _mask_array(masks), table)
    if status == _kernels.ERR_OUT_OF_DIGITS:
        raise OutOfDigits(f"digits ran out after {out.shape[0]} of {count} symbols")
    want = m.l if terminal_x is None else terminal_x
    if x != want:
        raise TerminalStateMismatch(f"decoder ended in state {x}, expected {want}")
    if pos != len(digits):
        raise TerminalStateMismatch(f"{len(digits) - pos} digits left unread")
    if expected_bit_table is not None:
        T = len(expected_bit_table)
        want_bits = np.roll(expected_bit_table.rotated().as_array(), -(count % T))
        if not np.array_equal(table, want_bits):
            raise TerminalStateMismatch("bit table does not return to its initial contents")
    return out.astype(np.int64)


def encode_message(symbols, tables: CodecTables,
                   initial_x: int | None = None) -> tuple[int, DigitBuffer]:
    enc = encode_stream(symbols, tables, initial_x=initial_x)
    return enc.final_x, enc.digits


def compress(symbols, tables: CodecTables, *, masks: MaskList | None = None,
             bit_table_len: int = 0):
    """Encode into an ANS1 container; the bit table is seeded from the table seed."""
    from .container import Container

    initial = BitTable.from_seed(bit_table_len, tables.seed) if bit_table_len else None
    enc = encode_stream(symbols, tables, masks=masks, bit_table=initial)
    return Container(model=tables.model, init=tables.init, seed=tables.seed,
                     symbol_count=enc.symbol_count, final_state=enc.final_x,
                     payload=enc.digits,
                     masks=None if masks is None else _mask_array(masks).astype(np.uint32),
                     bit_table=enc.bit_table)


def decode_message(container, tables: CodecTables) -> np.ndarray:
    """Decode an ANS1 container, checking it was written with ``tables``."""
    c = container
    if c.model != tables.model:
        raise ModelMismatch(f"container model {c.model.fingerprint()} differs from "
                            f"tables model {tables.model.fingerprint()}")
    if c.init != tables.init or (c.init == "scd" and c.seed != tables.seed):
        raise ModelMismatch("container table initialization differs from the given tables")
    masks = None if c.masks is None else MaskList(c.masks, 32)
    expected = None
    if c.bit_table is not None:
        expected = BitTable.from_seed(len(c.bit_table), c.seed)
    return decode_stream(c.final_state, c.payload, c.symbol_count, tables, masks=masks,
                         bit_table=c.bit_table, expected_bit_table=expected)
