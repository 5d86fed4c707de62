"""Bundled experiment suites: fidelity, kernel speed, and the scale search.

Each suite emits JSON-lines rows tagged with a schema version and the full
generator spec, so any row can be re-derived bit-exactly. Run the same thing
from the shell with `lowbit suite --name fidelity --out report.jsonl`.
"""
import numpy as np

from lowbit.bench import run_fidelity, run_lepto_suite, run_speed
from lowbit.tensor import RngSpec

print("fidelity on a 256x256 laplace-with-outliers tensor:")
print(f"{'scheme':>8} {'weight_mse':>12} {'output_cos':>11} {'bits/w':>7}")
for scheme in ("ternary", "tequila", "seq2", "sherry", "tl2"):
    rep = run_fidelity(scheme, RngSpec.laplace_outlier(13), (256, 256), calib_count=4)
    print(f"{scheme:>8} {rep['weight_mse']:>12.6f} {rep['output_cosine']:>11.4f} "
          f"{rep['bits_per_weight']:>7.3f}")

print("\nkernel speed, 512x512 (median of 5 runs):")
rep = run_speed("sherry", (512, 512), iters=10)
for name, k in rep["kernels"].items():
    print(f"  {name:>6}: {k['ns_per_matvec']/1e6:.2f} ms/matvec  checksum {k['checksum']}")

print("\nscale search over 20 seeds (heavy-tailed family):")
rep = run_lepto_suite(range(20))
ratios = [r["loss_best"] / r["loss_baseline"] for r in rep["per_seed"]]
print(f"  strict improvement on {rep['improvement_fraction']:.0%} of seeds, "
      f"median loss ratio {float(np.median(ratios)):.3f}")
