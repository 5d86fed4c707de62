"""3:4 structured-sparse ternary quantization with 5-bit block codes.

Every contiguous block of four weights keeps exactly three nonzero signs,
so a block is one of C(4,3) * 2^3 = 32 patterns and fits a 5-bit code with
no waste. Canonical layout: code = zero_position * 8 + sign_bits, where the
three nonzero signs (+1 -> 1, -1 -> 0) pack in ascending index order with
the first nonzero in the most significant of the three bits.

Also provides the contrasting TL2 packing (3 unconstrained ternary weights
per 5-bit base-3 code, 5/3 bits per weight) and the annealed-residual
training forward that mixes the quantized and latent paths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import as_matrix, as_vector, matvec_dense
from .ternary import TernaryTensor, ternarize

N_BLOCK_CODES = 32
N_TL2_CODES = 27


def _build_decode32() -> np.ndarray:
    table = np.zeros((N_BLOCK_CODES, 4), dtype=np.int8)
    for code in range(N_BLOCK_CODES):
        zero_pos = code >> 3
        bits = code & 0x7
        positions = [p for p in range(4) if p != zero_pos]
        for rank, pos in enumerate(positions):
            bit = (bits >> (2 - rank)) & 1
            table[code, pos] = 1 if bit else -1
    return table


DECODE32 = _build_decode32()
_DECODE32_F32 = DECODE32.astype(np.float32)

# _SIGN_BIT_WEIGHT[zero_pos, pos] = contribution of a +1 at pos to the 3 sign
# bits (0 at the zeroed position itself).
_SIGN_BIT_WEIGHT = np.array(
    [[0, 4, 2, 1], [4, 0, 2, 1], [4, 2, 0, 1], [4, 2, 1, 0]], dtype=np.uint8
)


@dataclass
class SherryTensor:
    codes: np.ndarray        # uint8 (m, n // 4), values in [0, 32)
    scale_alpha: np.ndarray  # float32 (m,)

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape[0], self.codes.shape[1] * 4


def project_3of4(block: np.ndarray) -> np.ndarray:
    """Zero the minimum-|w| position (ties: lowest index); rest become sign(w).

    sign(0) is defined as +1 so the projection is total.
    """
    block = np.asarray(block, dtype=np.float32)
    if block.shape != (4,):
        raise ValueError("expected a block of 4 values")
    if not np.all(np.isfinite(block)):
        raise ValueError("block values must be finite")
    out = np.where(block < 0, -1, 1).astype(np.int8)
    out[int(np.argmin(np.abs(block)))] = 0
    return out


def encode_block(block: np.ndarray) -> int:
    block = np.asarray(block, dtype=np.int8)
    if block.shape != (4,) or not np.all(np.isin(block, (-1, 0, 1))):
        raise ValueError("invalid block: values must be ternary")
    zeros = np.flatnonzero(block == 0)
    if zeros.size != 1:
        raise ValueError("invalid block: exactly one zero required")
    zero_pos = int(zeros[0])
    bits = 0
    for v in block[block != 0]:
        bits = (bits << 1) | (1 if v > 0 else 0)
    return zero_pos * 8 + bits


def decode_block(code: int) -> np.ndarray:
    code = int(code)
    if not 0 <= code < N_BLOCK_CODES:
        raise ValueError(f"block code out of range: {code}")
    return DECODE32[code].copy()


def sherry_quantize(w: np.ndarray) -> SherryTensor:
    """Project every 4-block to 3:4 ternary and encode; per-row alpha = mean
    |w| over the retained positions. Payload is exactly 1.25 bits/weight."""
    w = as_matrix(w)
    m, n = w.shape
    if n % 4 != 0:
        raise ValueError(f"column count {n} not divisible by 4: pad or reshape required")
    blocks = w.reshape(m, n // 4, 4)
    zero_pos = np.argmin(np.abs(blocks), axis=2)  # first minimum: lowest index on ties
    pos_bits = (blocks >= 0).astype(np.uint8)
    sign_bits = (pos_bits * _SIGN_BIT_WEIGHT[zero_pos]).sum(axis=2, dtype=np.uint8)
    codes = (zero_pos.astype(np.uint8) << 3) | sign_bits
    retained_sum = np.abs(blocks).sum(axis=(1, 2), dtype=np.float32) - np.take_along_axis(
        np.abs(blocks), zero_pos[:, :, None], axis=2
    ).sum(axis=(1, 2), dtype=np.float32)
    alpha = (retained_sum / np.float32(3 * (n // 4))).astype(np.float32)
    return SherryTensor(codes.astype(np.uint8), alpha)


def dequantize_sherry(q: SherryTensor) -> np.ndarray:
    m, n = q.shape
    signs = DECODE32[q.codes].reshape(m, n)
    return (signs.astype(np.float32) * q.scale_alpha[:, None]).astype(np.float32)


def naive_matvec(q: SherryTensor, x: np.ndarray) -> np.ndarray:
    """Reference kernel: decode to dense dequantized weights, then the shared
    fixed-order accumulation. Bitwise equal to matvec_dense on the decode."""
    x = as_vector(x)
    if x.shape[0] != q.shape[1]:
        raise ValueError(f"shape mismatch: weights {q.shape}, vector {x.shape[0]}")
    return matvec_dense(dequantize_sherry(q), x)


def lut_matvec(q: SherryTensor, x: np.ndarray) -> np.ndarray:
    """Table kernel: per 4-activation group, precompute all 32 signed sums
    once, then every row reduces to one lookup per block."""
    x = as_vector(x)
    m, n = q.shape
    if x.shape[0] != n:
        raise ValueError(f"shape mismatch: weights {q.shape}, vector {x.shape[0]}")
    groups = x.reshape(n // 4, 4)
    tables = groups @ _DECODE32_F32.T  # (n//4, 32)
    gathered = tables[np.arange(n // 4)[None, :], q.codes]
    return (q.scale_alpha * gathered.sum(axis=1)).astype(np.float32)


# ---------------------------------------------------------------------------
# TL2: 3 unconstrained ternary weights per 5-bit base-3 code (5/3 bits/weight)
# ---------------------------------------------------------------------------

_TL2_WEIGHTS = np.array([1, 3, 9], dtype=np.uint8)


def encode_tl2_block(values: np.ndarray) -> int:
    """Base-3 code sum((v_i + 1) * 3^i) over a triple of ternary values."""
    values = np.asarray(values, dtype=np.int8)
    if values.shape != (3,) or not np.all(np.isin(values, (-1, 0, 1))):
        raise ValueError("invalid tl2 block: expected 3 ternary values")
    return int(((values.astype(np.int16) + 1) * _TL2_WEIGHTS).sum())


def decode_tl2_block(code: int) -> np.ndarray:
    code = int(code)
    if not 0 <= code < N_TL2_CODES:
        raise ValueError(f"tl2 code out of range: {code}")
    return np.array([(code // 3**i) % 3 - 1 for i in range(3)], dtype=np.int8)


def tl2_encode_stream(signs_flat: np.ndarray) -> np.ndarray:
    """Encode a flat ternary stream as base-3 triples (zero-padded at the end)."""
    signs_flat = np.asarray(signs_flat, dtype=np.int8).ravel()
    pad = (-signs_flat.size) % 3
    if pad:
        signs_flat = np.concatenate([signs_flat, np.zeros(pad, dtype=np.int8)])
    trip = signs_flat.reshape(-1, 3).astype(np.int16) + 1
    return (trip * _TL2_WEIGHTS).sum(axis=1).astype(np.uint8)


def tl2_decode_stream(codes: np.ndarray, count: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint8)
    if codes.size and int(codes.max()) >= N_TL2_CODES:
        raise ValueError("invalid tl2 code in stream")
    c = codes.astype(np.int16)
    out = np.stack([c % 3, (c // 3) % 3, (c // 9) % 3], axis=1) - 1
    return out.astype(np.int8).ravel()[:count]


@dataclass
class Tl2Tensor:
    """A plain ternary tensor earmarked for the denser 5/3-bit container packing."""

    ternary: TernaryTensor

    @property
    def shape(self) -> tuple[int, int]:
        return self.ternary.shape


def quantize_tl2(w: np.ndarray, lam: float = 0.0) -> Tl2Tensor:
    return Tl2Tensor(ternarize(w, lam))


# ---------------------------------------------------------------------------
# Annealed residual mixing for 3:4 training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArenasSchedule:
    """Linear anneal of the residual mixing coefficient: lam0 at step 0,
    exactly zero at total_steps."""

    lambda0: float
    total_steps: int

    def __post_init__(self) -> None:
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")


def anneal_lambda(t: int, sched: ArenasSchedule) -> float:
    t = int(t)
    if not 0 <= t <= sched.total_steps:
        raise ValueError(f"step {t} outside [0, {sched.total_steps}]")
    if t == sched.total_steps:
        return 0.0
    return sched.lambda0 * (1.0 - t / sched.total_steps)


def arenas_forward(
    x: np.ndarray,
    q: SherryTensor,
    w: np.ndarray,
    t: int,
    sched: ArenasSchedule,
) -> np.ndarray:
    """Quantized matvec plus the annealed latent path lam_t * (w @ x).

    At t == total_steps the latent term is skipped entirely, so the output
    is bitwise identical to the quantized forward.
    """
    w = as_matrix(w)
    if w.shape != q.shape:
        raise ValueError(f"latent/quantized shape mismatch: {w.shape} vs {q.shape}")
    lam_t = anneal_lambda(t, sched)
    y = naive_matvec(q, x)
    if lam_t == 0.0:
        return y
    return (y + np.float32(lam_t) * matvec_dense(w, x)).astype(np.float32)
