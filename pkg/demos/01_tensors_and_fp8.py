"""Deterministic synthetic tensors and the software FP8-E4M3 emulator.

Every tensor in this package is a plain float32 numpy array. Randomness
comes from seeded specs with pinned transforms, so the same spec always
reproduces the same bits - rerun this script and the numbers won't move.
"""
import numpy as np

from lowbit import RngSpec, decode_e4m3, encode_e4m3, generate, qdq_tensor

# --- seeded generators -------------------------------------------------------
spec = RngSpec.laplace_outlier(seed=7, outlier_fraction=0.001, outlier_multiplier=20.0)
w = generate(spec, [64, 64])
print(f"laplace+outliers: shape={w.shape} mean|w|={np.mean(np.abs(w)):.4f} "
      f"max|w|={np.max(np.abs(w)):.2f}")
assert np.array_equal(w, generate(spec, [64, 64])), "same spec, same bits"

# --- the 8-bit float grid ----------------------------------------------------
print("\nselected E4M3 codes:")
for code in (0x00, 0x01, 0x38, 0x7E, 0x7F):
    print(f"  0x{code:02x} -> {decode_e4m3(code)}")

print("\nencoding is nearest-value with saturation at +-448:")
for x in (0.17, 1.0, 100.0, 500.0):
    print(f"  {x:>6} -> {decode_e4m3(encode_e4m3(x))}")

# --- quantize-dequantize round trips -----------------------------------------
t = generate(RngSpec.gaussian(11), [8])
scale = float(np.max(np.abs(t))) / 448.0
once = qdq_tensor(t, scale)
twice = qdq_tensor(once, scale)
print("\nQDQ is idempotent:", np.array_equal(once, twice))
print("relative error stays within 1/16 in the normal range:",
      bool(np.all(np.abs(t - once) <= 2.0**-4 * np.abs(t))))
