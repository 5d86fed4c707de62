"""Software emulation of the 8-bit E4M3 float format.

Finite-only convention: bias 7, subnormals at exponent 0, two NaN codes
(0x7F/0xFF), no infinities, largest finite magnitude 448. Encoding rounds
to nearest with ties to even mantissa and saturates above 448.
"""
from __future__ import annotations

import numpy as np

E4M3_MAX = 448.0
NAN_CODE = 0x7F


def _build_decode_table() -> np.ndarray:
    vals = np.empty(256, dtype=np.float64)
    for code in range(256):
        sign = -1.0 if code & 0x80 else 1.0
        exp = (code >> 3) & 0xF
        mant = code & 0x7
        if exp == 0xF and mant == 0x7:
            vals[code] = np.nan
        elif exp == 0:
            vals[code] = sign * (mant / 8.0) * 2.0**-6
        else:
            vals[code] = sign * (1.0 + mant / 8.0) * 2.0 ** (exp - 7)
    return vals


DECODE_TABLE = _build_decode_table()
# Codes 0x00..0x7E decode to a strictly increasing grid of non-negative values.
_POS_GRID = DECODE_TABLE[:0x7F].copy()
_MAX_CODE = 0x7E


def decode_e4m3(code: int) -> float:
    """Exact value of one byte code (total over all 256 codes)."""
    if not 0 <= int(code) <= 0xFF:
        raise ValueError(f"code out of range: {code}")
    return float(DECODE_TABLE[int(code)])


def encode_array(x: np.ndarray) -> np.ndarray:
    """Vectorized round-to-nearest-even E4M3 encoding; returns uint8 codes."""
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    nan = np.isnan(x)
    ax = np.where(nan, 0.0, ax)
    idx = np.searchsorted(_POS_GRID, ax)
    lo = np.clip(idx - 1, 0, _MAX_CODE)
    hi = np.clip(idx, 0, _MAX_CODE)
    dlo = ax - _POS_GRID[lo]
    dhi = _POS_GRID[hi] - ax
    codes = np.where(dlo < dhi, lo, hi)
    tie = dlo == dhi
    codes = np.where(tie & (lo % 2 == 0), lo, codes)
    codes = np.where(ax > E4M3_MAX, _MAX_CODE, codes)
    codes = codes.astype(np.uint8)
    codes |= (np.signbit(x)).astype(np.uint8) << 7
    codes = np.where(nan, np.uint8(NAN_CODE), codes)
    return codes


def encode_e4m3(x: float) -> int:
    """Nearest finite code for a scalar; NaN maps to the NaN code."""
    return int(encode_array(np.asarray([x]))[0])


def qdq_tensor(t: np.ndarray, scale: float) -> np.ndarray:
    """Quantize-dequantize: decode(encode(t / scale)) * scale, elementwise."""
    scale = float(scale)
    if not (scale > 0.0 and np.isfinite(scale)):
        raise ValueError("scale must be positive and finite")
    t = np.asarray(t, dtype=np.float32)
    codes = encode_array(t.astype(np.float64) / scale)
    return (DECODE_TABLE[codes] * scale).astype(np.float32)


def fp8_table() -> list[tuple[int, float]]:
    """All 256 (code, value) pairs, for audit dumps."""
    return [(code, float(DECODE_TABLE[code])) for code in range(256)]
