"""2-bit symmetric quantization over the zero-free level set {-1.5,-0.5,+0.5,+1.5}.

Codes map 00 -> -1.5, 01 -> -0.5, 10 -> +0.5, 11 -> +1.5 (times the per-row
scale), four codes per byte in the container. Decision boundaries sit at 0
and +-1.0*s; exact boundaries round away from zero and 0 rounds to +0.5*s,
so no weight ever dequantizes to zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import as_matrix, as_vector

LEVELS = np.array([-1.5, -0.5, 0.5, 1.5], dtype=np.float32)
MICRO_TUNE_FACTORS = (np.arange(50, 125, 5) / 100.0).tolist()  # 0.50 .. 1.20, 15 candidates


@dataclass
class SeqTensor:
    codes: np.ndarray  # uint8 (m, n), values in [0, 4)
    scale: np.ndarray  # float32 (m,)

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape


def _codes_for(w: np.ndarray, scale: np.ndarray) -> np.ndarray:
    s = scale[:, None]
    return np.where(w >= s, 3, np.where(w >= 0, 2, np.where(w > -s, 1, 0))).astype(np.uint8)


def _row_scale0(w: np.ndarray) -> np.ndarray:
    # Map the largest magnitude onto the outer level; all-zero rows get s = 1.
    amax = np.abs(w).max(axis=1)
    s = (amax / np.float32(1.5)).astype(np.float32)
    s[s == 0] = 1.0
    return s


def micro_tune_scale(w_row: np.ndarray, s0: float) -> float:
    """Pick s = s0 * k over k in {0.50, 0.55, ..., 1.20} minimizing the row's
    reconstruction MSE; ties resolve to the larger k. Never worse than s0."""
    w_row = np.asarray(w_row, dtype=np.float32)
    if w_row.ndim != 1 or w_row.size == 0:
        raise ValueError("expected a non-empty 1-D row")
    if not s0 > 0:
        raise ValueError("s0 must be positive")
    w2 = w_row[None, :]
    best_s = None
    best_mse = np.inf
    for k in MICRO_TUNE_FACTORS:
        s = np.float32(s0 * k)
        codes = _codes_for(w2, np.array([s], dtype=np.float32))
        deq = LEVELS[codes] * s
        err = float(np.mean((w_row.astype(np.float64) - deq[0]) ** 2))
        if err <= best_mse:
            best_mse = err
            best_s = float(s)
    return best_s


def seq_quantize(w: np.ndarray, micro_tune: bool = False) -> SeqTensor:
    """Quantize each weight to the nearest level of {+-0.5s, +-1.5s} with
    s0 = max|w_row| / 1.5, optionally micro-tuning each row's scale."""
    w = as_matrix(w)
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    scale = _row_scale0(w)
    if micro_tune:
        scale = np.array(
            [micro_tune_scale(w[r], float(scale[r])) for r in range(w.shape[0])],
            dtype=np.float32,
        )
    return SeqTensor(_codes_for(w, scale), scale)


def dequantize_seq(q: SeqTensor) -> np.ndarray:
    return (LEVELS[q.codes] * q.scale[:, None]).astype(np.float32)


def seq_matvec(q: SeqTensor, x: np.ndarray) -> np.ndarray:
    """Dequantize-free kernel: y_r = s_r * (1.5*(S3+ - S3-) + 0.5*(S1+ - S1-))
    where each S is the sum of activations under one code mask."""
    x = as_vector(x)
    m, n = q.shape
    if x.shape[0] != n:
        raise ValueError(f"shape mismatch: weights {q.shape}, vector {x.shape[0]}")
    c = q.codes
    outer = (x * (c == 3)).sum(axis=1, dtype=np.float32) - (x * (c == 0)).sum(
        axis=1, dtype=np.float32
    )
    inner = (x * (c == 2)).sum(axis=1, dtype=np.float32) - (x * (c == 1)).sum(
        axis=1, dtype=np.float32
    )
    return (q.scale * (np.float32(1.5) * outer + np.float32(0.5) * inner)).astype(np.float32)
