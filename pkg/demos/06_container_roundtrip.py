"""The ASQ container: bit-exact storage for every packed scheme.

Files carry magic, version, scheme id, dims, per-row scales, a JSON metadata
block (thresholds, the bias coefficient, folded biases) and the packed code
bitstream. A write-read-write cycle reproduces files byte for byte, and the
payload widths give the expected size ordering on equal shapes:
sparse 3:4 (1.25 b/w) < base-3 ternary (5/3 b/w) < 2-bit < raw float32.
"""
import os
import tempfile

from lowbit import (
    RngSpec,
    generate,
    inspect_asq,
    quantize_tl2,
    read_asq,
    seq_quantize,
    sherry_quantize,
    ternarize,
    write_asq,
    write_rtf,
)

w = generate(RngSpec.gaussian(42), [1024, 1024])
workdir = tempfile.mkdtemp(prefix="asq_demo_")

raw = os.path.join(workdir, "raw.rtf")
write_rtf(raw, w)
rows = [("raw float32", raw, 32.0)]
for name, q in (
    ("sherry", sherry_quantize(w)),
    ("tl2", quantize_tl2(w)),
    ("seq2", seq_quantize(w)),
    ("ternary", ternarize(w)),
):
    path = os.path.join(workdir, f"{name}.asq")
    write_asq(path, q)
    rep = inspect_asq(path)
    rows.append((name, path, rep["bits_per_weight_payload"]))

print(f"{'scheme':>12} {'payload b/w':>12} {'file bytes':>12}")
for name, path, bpw in rows:
    print(f"{name:>12} {bpw:>12.4f} {os.path.getsize(path):>12}")

first = os.path.join(workdir, "sherry.asq")
second = os.path.join(workdir, "sherry2.asq")
write_asq(second, read_asq(first))
with open(first, "rb") as a, open(second, "rb") as b:
    print("\nwrite -> read -> write is byte-identical:", a.read() == b.read())
print(f"\nartifacts left in {workdir} (inspect them with `lowbit inspect --in ...`)")
