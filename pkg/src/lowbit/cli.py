"""Command-line front end.

Subcommands: quantize, dequantize, inspect, bench, lepto-search, eval, suite.
Exit codes: 0 success, 2 validation error (bad arguments, malformed files,
violated preconditions), 1 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import asq, bench
from .fp8 import fp8_table
from .lepto import BlockSpec, LeptoConfig, grid_search
from .seq2 import seq_quantize
from .sherry import quantize_tl2, sherry_quantize
from .tensor import RngSpec, cosine, generate, matvec_dense, mse, read_rtf, write_rtf
from .ternary import quantize_tequila, ternarize

SCHEMES = ("ternary", "tequila", "seq2", "sherry", "tl2")


def _load_calib_dir(path) -> list[np.ndarray]:
    names = sorted(f for f in os.listdir(path) if f.endswith(".rtf"))
    if not names:
        raise ValueError(f"no .rtf calibration files in {path}")
    return [read_rtf(os.path.join(path, f)).ravel() for f in names]


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _cmd_quantize(args) -> int:
    w = read_rtf(args.infile)
    if args.scheme == "ternary":
        q = ternarize(w, args.lam)
    elif args.scheme == "tequila":
        q = quantize_tequila(w, args.lam)
    elif args.scheme == "seq2":
        q = seq_quantize(w, micro_tune=args.micro_tune)
    elif args.scheme == "sherry":
        q = sherry_quantize(w)
    else:
        q = quantize_tl2(w)
    asq.write_asq(args.outfile, q)
    if args.scheme in ("ternary", "tequila"):
        sidecar = {
            "delta": [float(v) for v in q.threshold_delta],
            "alpha": [float(v) for v in q.scale_alpha],
            "lambda": float(q.lam),
            "deadzone_fraction": float(q.deadzone_mask.mean()),
        }
        with open(args.outfile + ".json", "w", encoding="utf-8") as f:
            json.dump(sidecar, f, indent=2, sort_keys=True)
    _emit({"written": args.outfile, "report": asq.inspect_asq(args.outfile)})
    return 0


def _cmd_dequantize(args) -> int:
    q = asq.read_asq(args.infile)
    scheme = asq.scheme_name(q)
    write_rtf(args.outfile, bench.dequantize_any(scheme, q))
    _emit({"written": args.outfile, "scheme": scheme})
    return 0


def _cmd_inspect(args) -> int:
    if args.infile:
        _emit(asq.inspect_asq(args.infile))
    elif not args.fp8_table:
        raise ValueError("inspect requires --in or --fp8-table")
    if args.fp8_table:
        print("code,value")
        for code, value in fp8_table():
            print(f"{code},{value!r}")
    return 0


def _cmd_bench(args) -> int:
    if bool(args.infile) == bool(args.shape):
        raise ValueError("bench requires exactly one of --in or --shape")
    if args.infile:
        q = asq.read_asq(args.infile)
        scheme = asq.scheme_name(q)
    else:
        m, n = (int(v) for v in args.shape.lower().split("x"))
        w = generate(RngSpec.gaussian(args.seed), [m, n])
        scheme = args.scheme
        q = bench.quantize_any(scheme, w)
    kernels = bench.speed_kernels(scheme, q)
    if args.kernel not in kernels:
        raise ValueError(
            f"kernel {args.kernel!r} not available for scheme {scheme!r}"
            f" (have: {', '.join(sorted(kernels))})"
        )
    shape = q.shape
    x = generate(RngSpec.gaussian(args.seed + 1), [shape[1]])
    fn = kernels[args.kernel]
    y = fn(x)
    import time

    samples = []
    for _ in range(5):
        t0 = time.perf_counter_ns()
        for _ in range(args.iters):
            fn(x)
        samples.append((time.perf_counter_ns() - t0) / args.iters)
    _emit(
        {
            "kernel": args.kernel,
            "shape": list(shape),
            "ns_per_matvec": float(np.median(samples)),
            "checksum": bench.output_checksum(y),
        }
    )
    return 0


def _cmd_lepto_search(args) -> int:
    paths = args.block.split(",")
    if len(paths) != 2:
        raise ValueError("--block expects two files: w1.rtf,w2.rtf")
    block = BlockSpec(read_rtf(paths[0]), read_rtf(paths[1]))
    calib = _load_calib_dir(args.calib)
    if args.grid < 2:
        raise ValueError("--grid must be >= 2")
    alphas = tuple(0.001 * (i / (args.grid - 1)) for i in range(args.grid))
    cfg = LeptoConfig(alpha_grid=alphas, n_samples=len(calib))
    res = grid_search(block, calib, cfg)
    _emit(
        {
            "alpha_star": res.alpha_star,
            "D": res.denominator,
            "scale": res.scale,
            "losses": [{"alpha": a, "loss": l} for a, l in res.losses],
        }
    )
    return 0


def _cmd_eval(args) -> int:
    w = read_rtf(args.orig)
    q = asq.read_asq(args.quant)
    scheme = asq.scheme_name(q)
    if q.shape != w.shape:
        raise ValueError(f"shape mismatch: original {w.shape}, quantized {q.shape}")
    calib = _load_calib_dir(args.calib)
    mses = []
    coss = []
    for x in calib:
        y_ref = matvec_dense(w, x)
        y_q = bench.kernel_matvec(scheme, q, x)
        mses.append(mse(y_ref, y_q))
        coss.append(cosine(y_ref, y_q))
    _emit(
        {
            "mse": float(np.mean(mses)),
            "cosine_similarity": float(np.mean(coss)),
            "bits_per_weight": bench.payload_bits_per_weight(scheme, q.shape),
        }
    )
    return 0


def _cmd_suite(args) -> int:
    rows = bench.suite(args.name)
    bench.write_jsonl(args.out, rows)
    _emit({"written": args.out, "rows": len(rows)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lowbit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="RTF -> ASQ under a chosen scheme")
    q.add_argument("--scheme", required=True, choices=SCHEMES)
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--out", dest="outfile", required=True)
    q.add_argument("--micro-tune", action="store_true", help="seq2 scale micro-tuning")
    q.add_argument("--lambda", dest="lam", type=float, default=0.1,
                   help="deadzone bias coefficient (ternary/tequila)")
    q.set_defaults(fn=_cmd_quantize)

    d = sub.add_parser("dequantize", help="ASQ -> dense RTF")
    d.add_argument("--in", dest="infile", required=True)
    d.add_argument("--out", dest="outfile", required=True)
    d.set_defaults(fn=_cmd_dequantize)

    i = sub.add_parser("inspect", help="report container stats / dump the FP8 table")
    i.add_argument("--in", dest="infile", default=None)
    i.add_argument("--fp8-table", action="store_true",
                   help="dump all 256 E4M3 codes as CSV")
    i.set_defaults(fn=_cmd_inspect)

    b = sub.add_parser("bench", help="time one matvec kernel")
    b.add_argument("--in", dest="infile", default=None)
    b.add_argument("--shape", default=None, help="MxN synthetic tensor instead of --in")
    b.add_argument("--scheme", default="sherry", choices=SCHEMES)
    b.add_argument("--kernel", required=True, choices=("naive", "lut", "seq"))
    b.add_argument("--iters", type=int, default=10)
    b.add_argument("--seed", type=int, default=2024)
    b.set_defaults(fn=_cmd_bench)

    ls = sub.add_parser("lepto-search", help="grid-search the isolation fraction")
    ls.add_argument("--block", required=True, help="w1.rtf,w2.rtf")
    ls.add_argument("--calib", required=True, help="directory of .rtf activation vectors")
    ls.add_argument("--grid", type=int, default=11)
    ls.set_defaults(fn=_cmd_lepto_search)

    e = sub.add_parser("eval", help="compare original vs quantized on calibration data")
    e.add_argument("--orig", required=True)
    e.add_argument("--quant", required=True)
    e.add_argument("--calib", required=True)
    e.set_defaults(fn=_cmd_eval)

    s = sub.add_parser("suite", help="run a bundled experiment suite to JSONL")
    s.add_argument("--name", required=True, choices=("fidelity", "speed", "lepto"))
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (asq.AsqError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
