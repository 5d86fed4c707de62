"""Ternary quantization and the deadzone-bias training surrogate.

Weights inside the deadzone [-delta, delta] quantize to zero and see the
forward pass only through a small per-row bias term lam * sum(w_deadzone).
That bias gives them a live gradient during training and folds into a
constant afterwards, so inference pays nothing for it.
"""
import numpy as np

from lowbit import (
    ToyTask,
    deadzone_fraction,
    fold_bias,
    quantize_tequila,
    tequila_forward,
    ternarize,
    ternary_infer,
    train_toy,
)

w = np.array([[0.9, -0.8, 0.05, 0.5]], dtype=np.float32)
q = ternarize(w, lam=0.1)
print(f"row {w[0].tolist()}")
print(f"  signs={q.signs[0].tolist()} alpha={q.scale_alpha[0]:.5f} "
      f"delta={q.threshold_delta[0]:.5f} deadzone={deadzone_fraction(q):.2f}")

x = np.ones((1, 4), dtype=np.float32)
print(f"  surrogate forward on ones: {tequila_forward(x, q, w)[0, 0]:.5f}  "
      f"(quantized part {q.scale_alpha[0]:.5f} + bias {fold_bias(q, w)[0]:.5f})")

qf = quantize_tequila(w, lam=0.1)
print("  folded inference matches bitwise:",
      np.array_equal(ternary_infer(x, qf), tequila_forward(x, q, w)))

# --- the escape demonstration -------------------------------------------------
# The toy teacher has output offsets that the plain ternary forward cannot
# express (inputs are exactly column-centered). The bias path chases them,
# pushing deadzone weights across the threshold; the plain STE arm has no
# such pressure.
print("\ntoy regression, 500 steps, lr=0.02, lam=0.4:")
print(f"{'seed':>4} {'deadzone teq':>13} {'deadzone ste':>13} {'loss teq':>10} {'loss ste':>10}")
for seed in range(3):
    teq = train_toy(ToyTask(seed), steps=500, lr=0.02, lam=0.4, mode="tequila")
    ste = train_toy(ToyTask(seed), steps=500, lr=0.02, lam=0.4, mode="ste")
    print(f"{seed:>4} {teq.deadzone_fractions[-1]:>13.3f} {ste.deadzone_fractions[-1]:>13.3f} "
          f"{teq.losses[-1]:>10.3f} {ste.losses[-1]:>10.3f}")
