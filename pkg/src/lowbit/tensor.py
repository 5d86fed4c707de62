"""Dense float32 tensors, deterministic synthetic data, and small reductions.

All quantizers in this package operate on plain numpy float32 arrays in
row-major order. Randomness is derived exclusively from :class:`RngSpec`
through a counter-based Philox stream with explicit inverse-CDF / Box-Muller
transforms, so identical specs reproduce bit-identical tensors across runs
and platforms.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

RTF_MAGIC = b"ARTF"
RTF_VERSION = 1

_GAUSSIAN = "gaussian"
_LAPLACE = "laplace"
_LAPLACE_OUTLIER = "laplace_outlier"
_KINDS = (_GAUSSIAN, _LAPLACE, _LAPLACE_OUTLIER)


@dataclass(frozen=True)
class RngSpec:
    """Seeded description of a synthetic weight/activation distribution.

    kind is one of "gaussian" (loc=mean, scale=stdev), "laplace"
    (loc=location, scale=diversity b) or "laplace_outlier" (laplace with
    round(outlier_fraction * N) entries amplified by outlier_multiplier).
    """

    seed: int
    kind: str
    loc: float = 0.0
    scale: float = 1.0
    outlier_fraction: float = 0.0
    outlier_multiplier: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind: {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not 0.0 <= self.outlier_fraction <= 0.01:
            raise ValueError("outlier_fraction must lie in [0, 0.01]")
        if self.outlier_multiplier < 1.0:
            raise ValueError("outlier_multiplier must be >= 1")

    @classmethod
    def gaussian(cls, seed: int, mean: float = 0.0, stdev: float = 1.0) -> "RngSpec":
        return cls(seed=seed, kind=_GAUSSIAN, loc=mean, scale=stdev)

    @classmethod
    def laplace(cls, seed: int, location: float = 0.0, scale_b: float = 1.0) -> "RngSpec":
        return cls(seed=seed, kind=_LAPLACE, loc=location, scale=scale_b)

    @classmethod
    def laplace_outlier(
        cls,
        seed: int,
        location: float = 0.0,
        scale_b: float = 1.0,
        outlier_fraction: float = 0.001,
        outlier_multiplier: float = 20.0,
    ) -> "RngSpec":
        return cls(
            seed=seed,
            kind=_LAPLACE_OUTLIER,
            loc=location,
            scale=scale_b,
            outlier_fraction=outlier_fraction,
            outlier_multiplier=outlier_multiplier,
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "kind": self.kind,
            "loc": self.loc,
            "scale": self.scale,
            "outlier_fraction": self.outlier_fraction,
            "outlier_multiplier": self.outlier_multiplier,
        }


def _philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _uniform_open(rng: np.random.Generator, n: int) -> np.ndarray:
    # (k + 0.5) / 2^53 lies strictly inside (0, 1); safe for inverse CDFs.
    k = rng.integers(0, 1 << 53, size=n, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def _standard_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    # Box-Muller on the pinned uniform stream; both branches of each pair used.
    pairs = (n + 1) // 2
    u1 = _uniform_open(rng, pairs)
    u2 = _uniform_open(rng, pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n]


def _standard_laplace(rng: np.random.Generator, n: int) -> np.ndarray:
    v = _uniform_open(rng, n) - 0.5
    return -np.sign(v) * np.log1p(-2.0 * np.abs(v))


def _check_shape(shape) -> tuple[int, ...]:
    dims = tuple(int(d) for d in shape)
    if len(dims) == 0:
        raise ValueError("empty shape")
    if any(d < 1 for d in dims):
        raise ValueError(f"invalid shape {dims}: all dims must be >= 1")
    return dims


def generate(spec: RngSpec, shape) -> np.ndarray:
    """Draw a float32 tensor of the given shape from the spec's distribution."""
    dims = _check_shape(shape)
    n = int(np.prod(dims))
    rng = _philox(spec.seed)
    if spec.kind == _GAUSSIAN:
        x = spec.loc + spec.scale * _standard_normal(rng, n)
    else:
        x = spec.loc + spec.scale * _standard_laplace(rng, n)
        if spec.kind == _LAPLACE_OUTLIER:
            k = int(round(spec.outlier_fraction * n))
            if k > 0:
                # Random keys -> argsort gives a pinned, algorithm-stable choice
                # of exactly k distinct positions from the same stream.
                keys = _uniform_open(rng, n)
                idx = np.argsort(keys)[:k]
                x[idx] *= spec.outlier_multiplier
    return x.reshape(dims).astype(np.float32)


def as_matrix(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float32)
    if w.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={w.ndim}")
    return np.ascontiguousarray(w)


def as_vector(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got ndim={x.ndim}")
    return np.ascontiguousarray(x)


def matvec_dense(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y_r = sum_c w[r,c] * x[c], accumulated left to right in column order.

    Single-precision throughout; the fixed accumulation order makes the
    result reproducible and lets decode-then-accumulate kernels match it
    bit for bit on identical dequantized weights.
    """
    w = as_matrix(w)
    x = as_vector(x)
    m, n = w.shape
    if x.shape[0] != n:
        raise ValueError(f"shape mismatch: matrix is {m}x{n}, vector has {x.shape[0]}")
    acc = np.zeros(m, dtype=np.float32)
    for c in range(n):
        acc = acc + w[:, c] * x[c]
    return acc


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared elementwise difference, accumulated in double precision."""
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of flattened tensors (1.0 if both are zero)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 and nb == 0.0:
        return 1.0
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def quantile_abs(t: np.ndarray, q: float) -> float:
    """Nearest-rank quantile of |t|: the k-th smallest with k = ceil(q*N).

    k is clamped to [1, N]; q=1 returns max|t| exactly. No interpolation, so
    the result is always one of the tensor's absolute values.
    """
    t = np.asarray(t, dtype=np.float32)
    if t.size == 0:
        raise ValueError("empty tensor")
    if not 0.0 <= q <= 1.0:
        raise ValueError("quantile fraction must lie in [0, 1]")
    a = np.sort(np.abs(t.ravel()))
    k = int(np.ceil(q * t.size))
    k = min(max(k, 1), t.size)
    return float(a[k - 1])


def write_rtf(path, arr: np.ndarray) -> None:
    """Write a raw tensor file: "ARTF", version, ndim, u64 LE dims, f32 LE payload."""
    arr = np.ascontiguousarray(np.asarray(arr, dtype=np.float32))
    dims = _check_shape(arr.shape)
    with open(path, "wb") as f:
        f.write(RTF_MAGIC)
        f.write(struct.pack("<BB", RTF_VERSION, len(dims)))
        for d in dims:
            f.write(struct.pack("<Q", d))
        f.write(arr.astype("<f4").tobytes(order="C"))


def read_rtf(path) -> np.ndarray:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != RTF_MAGIC:
        raise ValueError("bad magic: not a raw tensor file")
    if len(blob) < 6:
        raise ValueError("truncated raw tensor header")
    version, ndim = struct.unpack_from("<BB", blob, 4)
    if version != RTF_VERSION:
        raise ValueError(f"unsupported raw tensor version {version}")
    if ndim < 1:
        raise ValueError("empty shape")
    off = 6
    if len(blob) < off + 8 * ndim:
        raise ValueError("truncated raw tensor dims")
    dims = struct.unpack_from(f"<{ndim}Q", blob, off)
    off += 8 * ndim
    n = int(np.prod(dims))
    expected = n * 4
    if len(blob) - off != expected:
        raise ValueError("raw tensor payload length mismatch")
    data = np.frombuffer(blob, dtype="<f4", count=n, offset=off)
    return data.reshape(dims).astype(np.float32)
