"""Ternary weight quantization with a deadzone-bias training surrogate.

Weights quantize per row to {-1, 0, +1} * alpha with threshold
delta = 0.7 * mean|w| and alpha = mean|w| over the retained (non-deadzone)
entries. The surrogate forward re-purposes deadzone weights as a per-row
bias lam * sum(w_deadzone), which gives them a direct gradient path; after
training the bias folds into a static per-row constant.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import _philox, _standard_normal, as_matrix, mse

THRESHOLD_FACTOR = 0.7
DEFAULT_LAMBDA = 0.1


@dataclass
class TernaryTensor:
    signs: np.ndarray            # int8 (m, n), values in {-1, 0, +1}
    scale_alpha: np.ndarray      # float32 (m,)
    threshold_delta: np.ndarray  # float32 (m,)
    deadzone_mask: np.ndarray    # bool (m, n); True iff |w| < delta at quantization
    lam: float = DEFAULT_LAMBDA
    folded_bias: np.ndarray | None = None  # float32 (m,), set once a bias is folded

    @property
    def shape(self) -> tuple[int, int]:
        return self.signs.shape


def compute_threshold(w_row: np.ndarray) -> float:
    """Deadzone half-width for one row: 0.7 * mean|w| (0 only for a zero row)."""
    w_row = np.asarray(w_row, dtype=np.float32)
    if w_row.ndim != 1 or w_row.size == 0:
        raise ValueError("expected a non-empty 1-D row")
    return float(np.float32(THRESHOLD_FACTOR) * np.mean(np.abs(w_row)))


def ternarize(w: np.ndarray, lam: float = DEFAULT_LAMBDA) -> TernaryTensor:
    """Quantize latent weights row-wise to signs, scale and deadzone mask.

    Boundary |w| == delta maps to sign(w); all-zero rows quantize to zero
    signs with alpha = 0.
    """
    w = as_matrix(w)
    if not np.all(np.isfinite(w)):
        raise ValueError("latent weights must be finite")
    aw = np.abs(w)
    delta = (np.float32(THRESHOLD_FACTOR) * aw.mean(axis=1)).astype(np.float32)
    d = delta[:, None]
    signs = np.where(w >= d, 1, np.where(w <= -d, -1, 0)).astype(np.int8)
    mask = aw < d
    # Degenerate all-zero rows (delta == 0): quantize to zero, alpha = 0.
    zero_rows = delta == 0
    if zero_rows.any():
        signs[zero_rows] = 0
        mask[zero_rows] = True
    keep = ~mask
    cnt = keep.sum(axis=1)
    alpha = np.divide(
        (aw * keep).sum(axis=1, dtype=np.float32),
        cnt,
        out=np.zeros(w.shape[0], dtype=np.float32),
        where=cnt > 0,
    ).astype(np.float32)
    return TernaryTensor(signs, alpha, delta, mask, float(lam))


def dequantize_ternary(q: TernaryTensor) -> np.ndarray:
    return (q.signs.astype(np.float32) * q.scale_alpha[:, None]).astype(np.float32)


def deadzone_fraction(q: TernaryTensor) -> float:
    return float(q.deadzone_mask.mean())


def fold_bias(q: TernaryTensor, w: np.ndarray) -> np.ndarray:
    """Per-row constant lam * sum of deadzone latents; inference then needs no latents."""
    w = as_matrix(w)
    if w.shape != q.shape:
        raise ValueError(f"latent/quantized shape mismatch: {w.shape} vs {q.shape}")
    return (np.float32(q.lam) * (w * q.deadzone_mask).sum(axis=1, dtype=np.float32)).astype(
        np.float32
    )


def tequila_forward(x: np.ndarray, q: TernaryTensor, w: np.ndarray) -> np.ndarray:
    """Y = X (alpha * signs)^T + fold_bias(q, w); the bias is input-independent."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 2:
        raise ValueError("expected a 2-D activation batch")
    if x.shape[1] != q.shape[1]:
        raise ValueError(f"shape mismatch: x has {x.shape[1]} features, weights {q.shape[1]}")
    bias = fold_bias(q, w)
    return x @ dequantize_ternary(q).T + bias[None, :]


def ternary_infer(x: np.ndarray, q: TernaryTensor) -> np.ndarray:
    """Deployment forward: quantized matmul plus the folded bias, no latents."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 2:
        raise ValueError("expected a 2-D activation batch")
    y = x @ dequantize_ternary(q).T
    if q.folded_bias is not None:
        y = y + q.folded_bias[None, :]
    return y


def tequila_grad(
    x: np.ndarray, q: TernaryTensor, w: np.ndarray, dl_dy: np.ndarray
) -> np.ndarray:
    """Manual gradient of the surrogate forward w.r.t. the latent weights.

    Every entry gets the straight-through data term sum_b x[b,c] * g[b,r];
    deadzone entries additionally get lam * sum_b g[b,r] from the bias path.
    """
    x = np.asarray(x, dtype=np.float32)
    dl_dy = np.asarray(dl_dy, dtype=np.float32)
    w = as_matrix(w)
    if w.shape != q.shape:
        raise ValueError(f"latent/quantized shape mismatch: {w.shape} vs {q.shape}")
    if x.ndim != 2 or dl_dy.ndim != 2:
        raise ValueError("expected 2-D x and dl_dy")
    if x.shape[0] != dl_dy.shape[0] or x.shape[1] != q.shape[1] or dl_dy.shape[1] != q.shape[0]:
        raise ValueError(
            f"shape mismatch: x {x.shape}, dl_dy {dl_dy.shape}, weights {q.shape}"
        )
    grad = dl_dy.T @ x
    if q.lam != 0.0:
        grad = grad + np.float32(q.lam) * q.deadzone_mask * dl_dy.sum(axis=0)[:, None]
    return grad.astype(np.float32)


def quantize_tequila(w: np.ndarray, lam: float = DEFAULT_LAMBDA) -> TernaryTensor:
    """Ternarize and fold the deadzone bias in, ready for latent-free inference."""
    q = ternarize(w, lam)
    q.folded_bias = fold_bias(q, as_matrix(w))
    return q


# ---------------------------------------------------------------------------
# Toy regression demonstrating deadzone escape
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToyTask:
    """Fixed synthetic regression against a hidden full-precision affine teacher.

    Inputs are standard normal with columns centered exactly, so the teacher's
    output offsets cannot be expressed through the data path at all: plain
    ternary training has no way to fit them, while the deadzone-bias surrogate
    chases them directly. teacher_bias_sd sets how hard that pressure is.
    """

    seed: int
    n_in: int = 24
    n_out: int = 12
    batch: int = 32
    teacher_bias_sd: float = 6.0

    def build(self) -> tuple[np.ndarray, np.ndarray]:
        rng = _philox(self.seed)
        x = _standard_normal(rng, self.batch * self.n_in).reshape(self.batch, self.n_in)
        x = (x - x.mean(axis=0)).astype(np.float32)
        wt = _standard_normal(rng, self.n_out * self.n_in).reshape(self.n_out, self.n_in)
        bt = self.teacher_bias_sd * _standard_normal(rng, self.n_out)
        targets = (x @ wt.T.astype(np.float32)) + bt.astype(np.float32)[None, :]
        return x, targets.astype(np.float32)

    def init_weights(self) -> np.ndarray:
        rng = _philox(self.seed + 0x5EED)
        w = 0.1 * _standard_normal(rng, self.n_out * self.n_in)
        return w.reshape(self.n_out, self.n_in).astype(np.float32)


@dataclass
class TrainTrace:
    losses: list[float] = field(default_factory=list)
    deadzone_fractions: list[float] = field(default_factory=list)
    final_weights: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.losses)


def train_toy(
    task: ToyTask,
    steps: int,
    lr: float,
    lam: float = 0.4,
    mode: str = "tequila",
) -> TrainTrace:
    """Full-batch gradient descent on the toy regression, one arm per call.

    mode "tequila" trains with the deadzone-bias forward and its manual
    gradient; mode "ste" is the plain ternary baseline (lam treated as 0).
    The deadzone mask is recomputed every step, so membership is dynamic.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not lr > 0:
        raise ValueError("lr must be positive")
    if mode not in ("ste", "tequila"):
        raise ValueError(f"unknown mode: {mode!r}")
    eff_lam = float(lam) if mode == "tequila" else 0.0
    x, targets = task.build()
    w = task.init_weights()
    trace = TrainTrace()
    for _ in range(steps):
        q = ternarize(w, eff_lam)
        y = tequila_forward(x, q, w)
        trace.losses.append(mse(y, targets))
        trace.deadzone_fractions.append(deadzone_fraction(q))
        g = ((2.0 / y.size) * (y - targets)).astype(np.float32)
        w = w - np.float32(lr) * tequila_grad(x, q, w, g)
    trace.final_weights = w
    return trace
