"""2-bit quantization over the symmetric, zero-free levels {-1.5,-0.5,0.5,1.5}*s.

Dropping the zero level spends all four codes on live magnitudes. The initial
scale maps the largest weight onto the outer level; a 15-point micro-tuning
grid then shrinks or stretches the row scale wherever that lowers the row's
reconstruction error.
"""
import numpy as np

from lowbit import (
    RngSpec,
    dequantize_seq,
    generate,
    micro_tune_scale,
    mse,
    seq_matvec,
    seq_quantize,
)

row = np.array([[0.9, -0.8, 0.05, 0.5]], dtype=np.float32)
q = seq_quantize(row)
print(f"row {np.round(row[0].astype(float), 3).tolist()}")
print(f"  scale {q.scale[0]:.3f}, codes {q.codes[0].tolist()}, "
      f"dequantized {np.round(dequantize_seq(q)[0].astype(float), 3).tolist()}")
print("  nothing dequantizes to zero:", bool(np.all(dequantize_seq(q) != 0)))

s_star = micro_tune_scale(row[0], float(q.scale[0]))
print(f"  micro-tuned scale {s_star:.3f}")

w = generate(RngSpec.gaussian(21), [256, 256])
plain = seq_quantize(w)
tuned = seq_quantize(w, micro_tune=True)
print(f"\n256x256 gaussian: weight MSE {mse(w, dequantize_seq(plain)):.6f} plain, "
      f"{mse(w, dequantize_seq(tuned)):.6f} micro-tuned")

x = generate(RngSpec.gaussian(22), [256])
y = seq_matvec(plain, x)
print(f"dequantize-free kernel runs on the codes directly: y[:4] = {np.round(y[:4].astype(float), 3).tolist()}")
