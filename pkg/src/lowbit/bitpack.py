"""LSB-first bitstream packing for fixed-width integer codes.

Stream layout: code i occupies bits [i*width, (i+1)*width), each code stored
least-significant bit first; stream bit k lives in byte k // 8 at bit k % 8.
The stream is zero-padded to a whole byte at the end.
"""
from __future__ import annotations

import numpy as np


def pack_codes(codes: np.ndarray, width: int) -> bytes:
    codes = np.ascontiguousarray(codes, dtype=np.uint64).ravel()
    if codes.size and int(codes.max()) >= (1 << width):
        raise ValueError(f"code does not fit in {width} bits")
    shifts = np.arange(width, dtype=np.uint64)
    bits = ((codes[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def unpack_codes(buf: bytes, width: int, count: int) -> np.ndarray:
    total = count * width
    if len(buf) * 8 < total:
        raise ValueError("bitstream too short")
    raw = np.frombuffer(buf, dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[:total]
    weights = np.uint64(1) << np.arange(width, dtype=np.uint64)
    return (bits.reshape(count, width).astype(np.uint64) * weights).sum(axis=1)


def packed_nbytes(count: int, width: int) -> int:
    return (count * width + 7) // 8
