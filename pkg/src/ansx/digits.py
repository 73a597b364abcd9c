from __future__ import annotations

import numpy as np


class DigitBuffer:
    """Base-``2**r`` digits packed r bits each, least significant bit first."""

    def __init__(self, digits, r: int = 1):
        self.r = r
        self.digits = np.ascontiguousarray(digits, dtype=np.uint32)
        if self.digits.size and int(self.digits.max()) >> r:
            raise ValueError(f"digit out of range for r={r}")

    def __len__(self) -> int:
        return int(self.digits.shape[0])

    def __getitem__(self, i):
        return self.digits[i]

    def __eq__(self, other) -> bool:
        return (isinstance(other, DigitBuffer) and self.r == other.r
                and np.array_equal(self.digits, other.digits))

    def __repr__(self) -> str:
        return f"DigitBuffer(len={len(self)}, r={self.r})"

    @property
    def bit_length(self) -> int:
        return len(self) * self.r

    def reversed(self) -> "DigitBuffer":
        return DigitBuffer(self.digits[::-1], self.r)

    def to_bits(self) -> np.ndarray:
        shifts = np.arange(self.r, dtype=np.uint32)
        return ((self.digits[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)

    @classmethod
    def from_bits(cls, bits, r: int = 1) -> "DigitBuffer":
        bits = np.asarray(bits, dtype=np.uint32)
        if bits.shape[0] % r:
            raise ValueError("bit count is not a multiple of r")
        weights = (1 << np.arange(r, dtype=np.uint32))
        return cls((bits.reshape(-1, r) * weights).sum(axis=1), r)

    def pack(self) -> bytes:
        return np.packbits(self.to_bits(), bitorder="little").tobytes()

    @classmethod
    def unpack(cls, data: bytes, r: int, bit_length: int) -> "DigitBuffer":
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        if bits.shape[0] < bit_length:
            raise ValueError("not enough bytes for the stated bit length")
        return cls.from_bits(bits[:bit_length], r)
