import numpy as np
import pytest

from lowbit import RngSpec, generate, matvec_dense, mse, quantile_abs, read_rtf, write_rtf
from lowbit.tensor import cosine


def test_generate_deterministic():
    a = generate(RngSpec.gaussian(7), [4])
    b = generate(RngSpec.gaussian(7), [4])
    assert a.dtype == np.float32
    assert np.array_equal(a, b)


def test_generate_distinct_seeds_differ():
    a = generate(RngSpec.gaussian(7), [16])
    b = generate(RngSpec.gaussian(8), [16])
    assert not np.array_equal(a, b)


def test_laplace_mean_abs_matches_diversity():
    # E|x - loc| = b for Laplace; the sample itself is the oracle.
    x = generate(RngSpec.laplace(42, 0.0, 1.0), [100_000])
    assert abs(float(np.mean(np.abs(x))) - 1.0) < 0.03


def test_laplace_outlier_exact_count():
    n = 10_000
    spec = RngSpec.laplace_outlier(5, 0.0, 1.0, 0.001, 20.0)
    base = generate(RngSpec.laplace(5, 0.0, 1.0), [n])
    out = generate(spec, [n])
    changed = np.flatnonzero(out != base)
    assert changed.size == 10
    np.testing.assert_allclose(out[changed], base[changed] * 20.0, rtol=1e-6)


def test_rng_spec_validation():
    with pytest.raises(ValueError):
        RngSpec.laplace_outlier(1, outlier_fraction=0.5)
    with pytest.raises(ValueError):
        RngSpec.laplace_outlier(1, outlier_multiplier=0.5)
    with pytest.raises(ValueError):
        RngSpec(seed=1, kind="cauchy")


def test_generate_shape_validation():
    with pytest.raises(ValueError, match="empty shape"):
        generate(RngSpec.gaussian(1), [])
    with pytest.raises(ValueError):
        generate(RngSpec.gaussian(1), [0, 3])


def test_matvec_identity():
    w = np.eye(2, dtype=np.float32)
    y = matvec_dense(w, np.array([3.0, 5.0], dtype=np.float32))
    assert np.array_equal(y, np.array([3.0, 5.0], dtype=np.float32))


def test_matvec_small_exact():
    w = np.array([[1.0, -1.0, 0.0, 1.0]], dtype=np.float32)
    x = np.array([1.0, 2.0, 3.0, 4.0], dtype=np.float32)
    assert matvec_dense(w, x)[0] == pytest.approx(3.0)


@pytest.mark.parametrize("n", [64, 256, 1024])
def test_matvec_against_double_oracle(n):
    rng = np.random.default_rng(n)
    w = rng.standard_normal((n, n)).astype(np.float32)
    x = rng.standard_normal(n).astype(np.float32)
    y = matvec_dense(w, x)
    oracle = w.astype(np.float64) @ x.astype(np.float64)
    rel = np.linalg.norm(y - oracle) / np.linalg.norm(oracle)
    assert rel <= 1e-6


def test_matvec_shape_mismatch():
    with pytest.raises(ValueError, match="shape mismatch"):
        matvec_dense(np.zeros((2, 3), dtype=np.float32), np.zeros(4, dtype=np.float32))


def test_mse_basic():
    a = np.array([0.0, 0.0], dtype=np.float32)
    b = np.array([1.0, 1.0], dtype=np.float32)
    assert mse(a, a) == 0.0
    assert mse(a, b) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mse(a, np.zeros(3, dtype=np.float32))


def test_mse_against_double_oracle():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(5000).astype(np.float32)
    b = rng.standard_normal(5000).astype(np.float32)
    d = a.astype(np.float64) - b.astype(np.float64)
    oracle = float(np.sum(d * d) / d.size)
    assert abs(mse(a, b) - oracle) <= 1e-7 * abs(oracle)


def test_quantile_abs_nearest_rank():
    rng = np.random.default_rng(0)
    vals = np.arange(1, 1001, dtype=np.float32) * rng.choice([-1.0, 1.0], 1000).astype(
        np.float32
    )
    rng.shuffle(vals)
    # nearest-rank oracle: k = ceil(q * N)
    assert quantile_abs(vals, 0.999) == 999.0
    assert quantile_abs(vals, 1.0) == 1000.0
    assert quantile_abs(vals, 0.0) == 1.0


def test_quantile_abs_constant_and_errors():
    t = np.full(17, -2.5, dtype=np.float32)
    for q in (0.0, 0.3, 0.999, 1.0):
        assert quantile_abs(t, q) == 2.5
    with pytest.raises(ValueError, match="empty"):
        quantile_abs(np.zeros(0, dtype=np.float32), 0.5)


def test_quantile_abs_is_max_for_q1():
    for seed in range(5):
        t = generate(RngSpec.laplace(seed), [257])
        assert quantile_abs(t, 1.0) == float(np.max(np.abs(t)))


def test_cosine():
    a = np.array([1.0, 0.0])
    assert cosine(a, a) == pytest.approx(1.0)
    assert cosine(a, -a) == pytest.approx(-1.0)
    assert cosine(np.zeros(2), np.zeros(2)) == 1.0
    assert cosine(np.zeros(2), a) == 0.0


def test_rtf_roundtrip(tmp_path):
    w = generate(RngSpec.gaussian(9), [5, 7])
    p = tmp_path / "w.rtf"
    write_rtf(p, w)
    back = read_rtf(p)
    assert back.shape == (5, 7)
    assert np.array_equal(back, w)


def test_rtf_errors(tmp_path):
    p = tmp_path / "w.rtf"
    write_rtf(p, generate(RngSpec.gaussian(9), [3, 3]))
    blob = bytearray(p.read_bytes())
    bad = tmp_path / "bad.rtf"
    bad.write_bytes(b"XXXX" + bytes(blob[4:]))
    with pytest.raises(ValueError, match="bad magic"):
        read_rtf(bad)
    short = tmp_path / "short.rtf"
    short.write_bytes(bytes(blob[:-4]))
    with pytest.raises(ValueError, match="length mismatch"):
        read_rtf(short)
