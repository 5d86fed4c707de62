"""3:4 structured-sparse ternary packing and the lookup-table kernel.

A block of four weights with exactly one zero has 4 * 2^3 = 32 possible
patterns - a 5-bit code with zero waste, 1.25 bits per weight. Because the
block width is a power of two, an input vector can be folded into per-group
tables of all 32 signed sums once, and every output row then costs one
table lookup per block instead of four multiply-adds.
"""
import time

import numpy as np

from lowbit import (
    ArenasSchedule,
    RngSpec,
    anneal_lambda,
    arenas_forward,
    decode_block,
    encode_block,
    generate,
    lut_matvec,
    naive_matvec,
    project_3of4,
    sherry_quantize,
)

block = np.array([0.9, -0.8, 0.05, 0.5])
t = project_3of4(block)
code = encode_block(t)
print(f"{block.tolist()} -> ternary {t.tolist()} -> code {code} -> {decode_block(code).tolist()}")

print("\nfirst eight codes of the 32-entry table:")
for c in range(8):
    print(f"  {c:2d}: {decode_block(c).tolist()}")

# --- kernels ------------------------------------------------------------------
w = generate(RngSpec.gaussian(3), [1024, 1024])
x = generate(RngSpec.gaussian(4), [1024])
q = sherry_quantize(w)

t0 = time.perf_counter(); y_naive = naive_matvec(q, x); t_naive = time.perf_counter() - t0
t0 = time.perf_counter(); y_lut = lut_matvec(q, x); t_lut = time.perf_counter() - t0
dev = np.max(np.abs(y_lut - y_naive)) / np.max(np.abs(y_naive))
print(f"\n1024x1024 matvec: naive {t_naive*1e3:.1f} ms, lut {t_lut*1e3:.1f} ms, "
      f"max rel deviation {dev:.1e}")

# --- annealed residual mixing ---------------------------------------------------
sched = ArenasSchedule(lambda0=0.5, total_steps=100)
print("\nresidual coefficient anneals linearly to exactly zero:")
for t_step in (0, 50, 100):
    print(f"  t={t_step:>3}: lam={anneal_lambda(t_step, sched):.3f}")
w_small = generate(RngSpec.gaussian(5), [8, 16])
q_small = sherry_quantize(w_small)
x_small = generate(RngSpec.gaussian(6), [16])
final = arenas_forward(x_small, q_small, w_small, 100, sched)
print("  at t=T the forward is bitwise the quantized kernel:",
      np.array_equal(final, naive_matvec(q_small, x_small)))
