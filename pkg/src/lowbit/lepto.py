"""Outlier-isolating scale search for FP8 activation quantization.

Standard abs-max FP8 lets a handful of extreme activations dictate the
scale. Here the scale denominator is a high nearest-rank quantile of |t|
chosen by a grid search over the isolation fraction alpha in [0, 0.001]:
entries above the denominator are held out of quantization at full
precision, the dense bulk is quantize-dequantized at scale D / 448, and the
winning alpha minimizes the mean squared error of a small feed-forward
block's outputs over a calibration batch. alpha = 0 degenerates to plain
abs-max FP8 exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fp8 import E4M3_MAX, qdq_tensor
from .tensor import mse, quantile_abs

DEFAULT_ALPHA_GRID = tuple(round(i * 0.0001, 6) for i in range(11))


@dataclass(frozen=True)
class LeptoConfig:
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    n_samples: int = 16
    fp8_max: float = E4M3_MAX

    def __post_init__(self) -> None:
        grid = tuple(self.alpha_grid)
        if not grid or grid[0] != 0.0:
            raise ValueError("alpha_grid must start at 0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("alpha_grid must be strictly increasing")
        if grid[-1] > 0.001:
            raise ValueError("alpha_grid must stay within [0, 0.001]")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass
class BlockSpec:
    """Two-matmul feed-forward block: x[n] -> w1[h x n] -> silu -> w2[n x h] -> y[n]."""

    w1: np.ndarray
    w2: np.ndarray
    activation: str = "silu"

    def __post_init__(self) -> None:
        self.w1 = np.ascontiguousarray(np.asarray(self.w1, dtype=np.float32))
        self.w2 = np.ascontiguousarray(np.asarray(self.w2, dtype=np.float32))
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ValueError("block weights must be 2-D")
        h, n = self.w1.shape
        n2, h2 = self.w2.shape
        if n2 != n or h2 != h:
            raise ValueError(
                f"block shapes do not conform: w1 {self.w1.shape}, w2 {self.w2.shape}"
            )
        if self.activation != "silu":
            raise ValueError(f"unsupported activation: {self.activation!r}")


@dataclass
class LeptoResult:
    alpha_star: float
    denominator: float
    scale: float
    losses: list[tuple[float, float]] = field(default_factory=list)


def outlier_denominator(t: np.ndarray, alpha: float) -> float:
    """Scale denominator D: the nearest-rank (1 - alpha)-quantile of |t|.

    alpha = 0 returns max|t| exactly (plain abs-max)."""
    if not 0.0 <= alpha <= 0.001:
        raise ValueError("alpha must lie in [0, 0.001]")
    return quantile_abs(t, 1.0 - alpha)


def qdq_isolated(t: np.ndarray, denominator: float, fp8_max: float = E4M3_MAX) -> np.ndarray:
    """FP8 QDQ at scale denominator / fp8_max; entries above the denominator
    saturate to +-denominator (up to the last ULP of the top code)."""
    if not denominator > 0:
        raise ValueError("denominator must be positive")
    return qdq_tensor(t, float(denominator) / float(fp8_max))


def _silu(x: np.ndarray) -> np.ndarray:
    # Numerically stable on both tails; maps 0 -> 0.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = x[pos] / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = x[~pos] * ex / (1.0 + ex)
    return out


def _absmax_qdq(w: np.ndarray, fp8_max: float) -> np.ndarray:
    amax = float(np.max(np.abs(w)))
    if amax == 0.0:
        return w.copy()
    return qdq_tensor(w, amax / float(fp8_max))


def _isolating_qdq(a: np.ndarray, alpha: float, fp8_max: float) -> np.ndarray:
    """Quantize the dense bulk at scale D / fp8_max; entries with |v| > D are
    isolated (kept at full precision). With alpha = 0 nothing exceeds D, so
    this is bitwise plain abs-max QDQ."""
    d = outlier_denominator(a, alpha)
    if d == 0.0:
        return a.copy()
    out = qdq_tensor(a, d / float(fp8_max))
    keep = np.abs(a) > d
    if keep.any():
        out[keep] = a[keep]
    return out


def block_forward(
    block: BlockSpec,
    x: np.ndarray,
    alpha: float | None = None,
    quantize_weights: bool | None = None,
    fp8_max: float = E4M3_MAX,
) -> np.ndarray:
    """Run the block on a vector or batch of activations.

    With alpha = None and quantize_weights unset this is the plain
    single-precision forward. With alpha set, both weight matrices get
    per-tensor abs-max FP8 QDQ and the tensor entering each matmul gets
    isolating QDQ at fraction alpha (the quantile is taken over the whole
    tensor, batch included, mirroring offline calibration).
    """
    x = np.asarray(x, dtype=np.float32)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != block.w1.shape[1]:
        raise ValueError(f"shape mismatch: x {x.shape}, w1 {block.w1.shape}")
    if quantize_weights is None:
        quantize_weights = alpha is not None
    w1, w2 = block.w1, block.w2
    if quantize_weights:
        w1 = _absmax_qdq(w1, fp8_max)
        w2 = _absmax_qdq(w2, fp8_max)
    xin = x if alpha is None else _isolating_qdq(x, alpha, fp8_max)
    hidden = _silu(xin @ w1.T)
    hin = hidden if alpha is None else _isolating_qdq(hidden, alpha, fp8_max)
    y = hin @ w2.T
    return y[0] if single else y


def grid_search(
    block: BlockSpec, calib: list[np.ndarray], cfg: LeptoConfig | None = None
) -> LeptoResult:
    """Exact search over the alpha grid minimizing mean output MSE.

    The reference keeps weights FP8-quantized and activations at full
    precision, so the loss measures activation-quantization error alone.
    Ties resolve toward the smaller alpha; the full loss curve is returned.
    """
    if cfg is None:
        cfg = LeptoConfig()
    if not calib:
        raise ValueError("empty calibration set")
    x = np.stack([np.asarray(v, dtype=np.float32).ravel() for v in calib])
    y_ref = block_forward(block, x, alpha=None, quantize_weights=True, fp8_max=cfg.fp8_max)
    losses: list[tuple[float, float]] = []
    best_alpha = None
    best_loss = np.inf
    for alpha in cfg.alpha_grid:
        y_hat = block_forward(block, x, alpha=alpha, fp8_max=cfg.fp8_max)
        loss = mse(y_ref, y_hat)
        losses.append((float(alpha), loss))
        if loss < best_loss:
            best_loss = loss
            best_alpha = float(alpha)
    denominator = outlier_denominator(x, best_alpha)
    scale = denominator / float(cfg.fp8_max)
    return LeptoResult(best_alpha, denominator, scale, losses)
