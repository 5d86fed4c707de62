"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -rA` (or `-s`) to see the lines.
"""
import itertools
import time

import numpy as np
import pytest

import lowbit
from lowbit import (
    ArenasSchedule,
    RngSpec,
    ToyTask,
    arenas_forward,
    decode_block,
    dequantize_seq,
    dequantize_sherry,
    encode_block,
    generate,
    lut_matvec,
    matvec_dense,
    micro_tune_scale,
    mse,
    naive_matvec,
    read_asq,
    seq_quantize,
    sherry_quantize,
    ternarize,
    train_toy,
    write_asq,
    write_rtf,
)
from lowbit.asq import (
    AsqBadMagicError,
    AsqPayloadLengthError,
    AsqTruncatedError,
)
from lowbit.bench import run_lepto_suite
from lowbit.bitpack import pack_codes, unpack_codes
from lowbit.fp8 import DECODE_TABLE, encode_array
from lowbit.seq2 import LEVELS
from lowbit.ternary import dequantize_ternary, tequila_grad


def _report(num: int, text: str) -> None:
    print(f"PASS criterion {num:02d}: {text}")


def test_criterion_01_sherry_code_space():
    t0 = time.perf_counter()
    blocks = []
    for zero_pos in range(4):
        for signs in itertools.product((-1, 1), repeat=3):
            b = np.zeros(4, dtype=np.int8)
            it = iter(signs)
            for p in range(4):
                if p != zero_pos:
                    b[p] = next(it)
            blocks.append(b)
    assert len(blocks) == 32
    codes = [encode_block(b) for b in blocks]
    assert sorted(codes) == list(range(32))
    for b, c in zip(blocks, codes):
        assert np.array_equal(decode_block(c), b)
    ms = (time.perf_counter() - t0) * 1e3
    _report(1, f"32 valid 3:4 blocks, encode/decode bijective onto [0,32) ({ms:.2f} ms)")


def test_criterion_02_payload_density_and_size_ordering(tmp_path):
    w = generate(RngSpec.gaussian(1234), [4096, 4096])
    raw = tmp_path / "raw.rtf"
    write_rtf(raw, w)
    sizes = {}
    bpw = {}
    for name, q in (
        ("sherry", sherry_quantize(w)),
        ("tl2", lowbit.quantize_tl2(w)),
        ("seq2", seq_quantize(w)),
    ):
        p = tmp_path / f"{name}.asq"
        write_asq(p, q)
        rep = lowbit.inspect_asq(p)
        sizes[name] = rep["total_bytes"]
        bpw[name] = rep["bits_per_weight_payload"]
    assert bpw["sherry"] == 1.25
    assert bpw["seq2"] == 2.0
    assert abs(bpw["tl2"] - 5.0 / 3.0) <= 1e-4
    # sherry payload alone: 4096 * 4096 * 1.25 / 8 bytes
    assert bpw["sherry"] * 4096 * 4096 / 8 == 2_621_440
    raw_bytes = raw.stat().st_size
    assert sizes["sherry"] < sizes["tl2"] < sizes["seq2"] < raw_bytes
    _report(
        2,
        "payload 1.25/1.667/2.0 bits per weight; file sizes "
        f"{sizes['sherry']} < {sizes['tl2']} < {sizes['seq2']} < {raw_bytes} (raw)",
    )


def test_criterion_03_kernel_equivalence():
    worst = 0.0
    for seed in range(100):
        w = generate(RngSpec.gaussian(40_000 + seed), [512, 512])
        x = generate(RngSpec.gaussian(50_000 + seed), [512])
        q = sherry_quantize(w)
        y_naive = naive_matvec(q, x)
        assert np.array_equal(y_naive, matvec_dense(dequantize_sherry(q), x))
        y_lut = lut_matvec(q, x)
        rel = float(np.max(np.abs(y_lut - y_naive))) / float(np.max(np.abs(y_naive)))
        worst = max(worst, rel)
    assert worst <= 1e-5
    _report(3, f"100 x 512x512: lut vs naive max rel dev {worst:.2e} <= 1e-5; "
               "naive bitwise equals dense on dequantized weights")


def test_criterion_04_lepto_improvement():
    rep = run_lepto_suite(range(20))
    assert rep["never_worse_fraction"] == 1.0
    assert rep["improvement_fraction"] >= 0.9
    _report(4, f"20 seeds: L(a*) <= L(0) on 100%, strict improvement on "
               f"{rep['improvement_fraction']:.0%} (>= 90%)")


def test_criterion_05_tequila_gradient_vs_finite_differences():
    rng = np.random.default_rng(777)
    h = 1e-3
    worst = 0.0
    for _ in range(50):
        w = rng.standard_normal((8, 8)).astype(np.float32)
        x = rng.standard_normal((4, 8)).astype(np.float32)
        q = ternarize(w, lam=0.1)
        dl = np.ones((4, 8), dtype=np.float32)  # loss = sum(Y)
        g = tequila_grad(x, q, w, dl)

        x64 = x.astype(np.float64)
        deq = dequantize_ternary(q).astype(np.float64)
        mask = q.deadzone_mask
        w64 = w.astype(np.float64)

        def loss(wt):
            y = x64 @ (deq + (wt - w64)).T + (0.1 * (wt * mask).sum(axis=1))[None, :]
            return float(y.sum())

        g_fd = np.zeros_like(w64)
        for r in range(8):
            for c in range(8):
                wp = w64.copy()
                wp[r, c] += h
                wm = w64.copy()
                wm[r, c] -= h
                g_fd[r, c] = (loss(wp) - loss(wm)) / (2 * h)
        rel = np.linalg.norm(g - g_fd) / np.linalg.norm(g_fd)
        worst = max(worst, float(rel))
    assert worst <= 1e-4
    _report(5, f"50 random 8x8 layers: manual grad vs central differences "
               f"(h=1e-3) worst rel err {worst:.2e} <= 1e-4")


def test_criterion_06_deadzone_escape():
    dz_wins = 0
    loss_wins = 0
    for seed in range(10):
        teq = train_toy(ToyTask(seed), steps=500, lr=0.02, lam=0.4, mode="tequila")
        ste = train_toy(ToyTask(seed), steps=500, lr=0.02, lam=0.4, mode="ste")
        dz_wins += teq.deadzone_fractions[-1] < ste.deadzone_fractions[-1]
        loss_wins += teq.losses[-1] <= ste.losses[-1]
    assert dz_wins >= 8
    assert loss_wins >= 8
    _report(6, f"toy regression, 10 seeds: lower final deadzone fraction in "
               f"{dz_wins}/10, final loss no worse in {loss_wins}/10 (both >= 8)")


def test_criterion_07_arenas_terminal_identity():
    sched = ArenasSchedule(lambda0=0.5, total_steps=100)
    for seed in range(20):
        w = generate(RngSpec.gaussian(60_000 + seed), [24, 32])
        x = generate(RngSpec.gaussian(61_000 + seed), [32])
        q = sherry_quantize(w)
        assert np.array_equal(arenas_forward(x, q, w, 100, sched), naive_matvec(q, x))
    _report(7, "annealed residual forward at t = T bitwise equals the "
               "quantized forward on 20 random instances")


def test_criterion_08_fp8_e4m3():
    finite_max = 0.0
    for code in range(256):
        v = lowbit.decode_e4m3(code)
        if np.isnan(v):
            assert np.isnan(lowbit.decode_e4m3(lowbit.encode_e4m3(v)))
        else:
            assert lowbit.decode_e4m3(lowbit.encode_e4m3(v)) == v
            finite_max = max(finite_max, abs(v))
    assert finite_max == 448.0
    xs = np.linspace(-448.0, 448.0, 100_000)
    ys = DECODE_TABLE[encode_array(xs)]
    assert np.all(np.diff(ys) >= 0)
    _report(8, "all 256 codes round-trip; max finite 448; monotone rounding "
               "over 1e5 points in [-448, 448]")


def test_criterion_09_seq2():
    for seed in range(5):
        w = generate(RngSpec.laplace(70_000 + seed), [16, 64])
        assert np.all(dequantize_seq(seq_quantize(w)) != 0.0)
    rng = np.random.default_rng(901)
    for _ in range(1000):
        row = rng.standard_normal(16).astype(np.float32)
        s0 = float(np.max(np.abs(row)) / 1.5)
        base = mse(row[None, :], dequantize_seq(seq_quantize(row[None, :])))
        s_star = micro_tune_scale(row, s0)
        codes = np.where(
            row >= s_star, 3, np.where(row >= 0, 2, np.where(row > -s_star, 1, 0))
        )
        tuned = mse(row, (LEVELS[codes] * np.float32(s_star)).astype(np.float32))
        assert tuned <= base + 1e-12
    all_bytes = bytes(range(256))
    assert pack_codes(unpack_codes(all_bytes, 2, 1024), 2) == all_bytes
    _report(9, "zero-free codebook; micro-tune never increases row MSE "
               "(1000 rows); exhaustive 2-bit pack/unpack byte round-trip")


def test_criterion_10_container(tmp_path):
    w = generate(RngSpec.laplace(80_001), [12, 16])
    quantizers = {
        "ternary": ternarize(w, 0.1),
        "tequila": lowbit.quantize_tequila(w, 0.1),
        "seq2": seq_quantize(w),
        "sherry": sherry_quantize(w),
        "tl2": lowbit.quantize_tl2(w),
    }
    for name, q in quantizers.items():
        p1 = tmp_path / f"{name}1.asq"
        p2 = tmp_path / f"{name}2.asq"
        write_asq(p1, q)
        write_asq(p2, read_asq(p1))
        assert p1.read_bytes() == p2.read_bytes()

    good = (tmp_path / "sherry1.asq").read_bytes()
    bad_magic = tmp_path / "m.asq"
    bad_magic.write_bytes(b"XSQ1" + good[4:])
    with pytest.raises(AsqBadMagicError):
        read_asq(bad_magic)
    truncated = tmp_path / "t.asq"
    truncated.write_bytes(good[:9])
    with pytest.raises(AsqTruncatedError):
        read_asq(truncated)
    mismatch = tmp_path / "p.asq"
    mismatch.write_bytes(good[:-2])
    with pytest.raises(AsqPayloadLengthError):
        read_asq(mismatch)
    _report(10, "write-read-write byte-identical for all 5 schemes; bad magic, "
                "truncation and payload length mismatch raise distinct errors")
