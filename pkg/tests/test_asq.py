import numpy as np
import pytest

from lowbit import (
    AsqBadMagicError,
    AsqBadSchemeError,
    AsqBadVersionError,
    AsqError,
    AsqPayloadLengthError,
    AsqTruncatedError,
    RngSpec,
    generate,
    inspect_asq,
    quantize_tequila,
    quantize_tl2,
    read_asq,
    scheme_name,
    seq_quantize,
    sherry_quantize,
    ternarize,
    write_asq,
)
from lowbit.seq2 import SeqTensor
from lowbit.sherry import SherryTensor, Tl2Tensor
from lowbit.ternary import TernaryTensor

W = generate(RngSpec.laplace(99), [12, 16])


def _quantizers():
    return {
        "ternary": lambda: ternarize(W, lam=0.1),
        "tequila": lambda: quantize_tequila(W, lam=0.1),
        "seq2": lambda: seq_quantize(W),
        "sherry": lambda: sherry_quantize(W),
        "tl2": lambda: quantize_tl2(W),
    }


@pytest.mark.parametrize("name", ["ternary", "tequila", "seq2", "sherry", "tl2"])
def test_roundtrip_logical_equality(name, tmp_path):
    q = _quantizers()[name]()
    p = tmp_path / f"{name}.asq"
    write_asq(p, q)
    back = read_asq(p)
    if isinstance(q, Tl2Tensor):
        assert isinstance(back, Tl2Tensor)
        q, back = q.ternary, back.ternary
    if isinstance(q, TernaryTensor):
        assert np.array_equal(back.signs, q.signs)
        assert np.array_equal(back.scale_alpha, q.scale_alpha)
        assert np.array_equal(back.threshold_delta, q.threshold_delta)
        assert np.array_equal(back.deadzone_mask, q.deadzone_mask)
        assert back.lam == q.lam
        if q.folded_bias is None:
            assert back.folded_bias is None
        else:
            assert np.array_equal(back.folded_bias, q.folded_bias)
    elif isinstance(q, SeqTensor):
        assert np.array_equal(back.codes, q.codes)
        assert np.array_equal(back.scale, q.scale)
    else:
        assert isinstance(back, SherryTensor)
        assert np.array_equal(back.codes, q.codes)
        assert np.array_equal(back.scale_alpha, q.scale_alpha)


@pytest.mark.parametrize("name", ["ternary", "tequila", "seq2", "sherry", "tl2"])
def test_write_read_write_byte_identical(name, tmp_path):
    q = _quantizers()[name]()
    p1 = tmp_path / "a.asq"
    p2 = tmp_path / "b.asq"
    write_asq(p1, q)
    write_asq(p2, read_asq(p1))
    assert p1.read_bytes() == p2.read_bytes()


def _valid_file(tmp_path):
    p = tmp_path / "v.asq"
    write_asq(p, sherry_quantize(W))
    return p, bytearray(p.read_bytes())


def test_bad_magic(tmp_path):
    p, blob = _valid_file(tmp_path)
    blob[0] ^= 0xFF
    p.write_bytes(bytes(blob))
    with pytest.raises(AsqBadMagicError, match="bad magic"):
        read_asq(p)


def test_bad_version(tmp_path):
    p, blob = _valid_file(tmp_path)
    blob[4] = 9
    p.write_bytes(bytes(blob))
    with pytest.raises(AsqBadVersionError):
        read_asq(p)


def test_bad_scheme(tmp_path):
    p, blob = _valid_file(tmp_path)
    blob[5] = 0x77
    p.write_bytes(bytes(blob))
    with pytest.raises(AsqBadSchemeError):
        read_asq(p)


def test_truncated_header(tmp_path):
    p, blob = _valid_file(tmp_path)
    p.write_bytes(bytes(blob[:10]))  # cut inside the dims
    with pytest.raises(AsqTruncatedError, match="truncated"):
        read_asq(p)


def test_payload_length_mismatch(tmp_path):
    p, blob = _valid_file(tmp_path)
    p.write_bytes(bytes(blob[:-1]))
    with pytest.raises(AsqPayloadLengthError, match="payload length mismatch"):
        read_asq(p)
    p.write_bytes(bytes(blob) + b"\x00")
    with pytest.raises(AsqPayloadLengthError):
        read_asq(p)


def test_error_types_are_distinct():
    kinds = {AsqBadMagicError, AsqBadVersionError, AsqBadSchemeError,
             AsqTruncatedError, AsqPayloadLengthError}
    assert len(kinds) == 5
    for k in kinds:
        assert issubclass(k, AsqError)


def test_reserved_ternary_code_rejected(tmp_path):
    p = tmp_path / "t.asq"
    write_asq(p, ternarize(W))
    blob = bytearray(p.read_bytes())
    blob[-1] |= 0xC0  # force a 0b11 code into the last payload byte
    p.write_bytes(bytes(blob))
    with pytest.raises(AsqError, match="reserved"):
        read_asq(p)


def test_bad_metadata(tmp_path):
    p, blob = _valid_file(tmp_path)
    # sherry metadata is the 2-byte JSON "{}" right before the payload
    idx = bytes(blob).find(b"{}")
    assert idx > 0
    blob[idx] = ord("[")
    blob[idx + 1] = ord("]")
    p.write_bytes(bytes(blob))
    with pytest.raises(AsqError, match="metadata"):
        read_asq(p)


def test_inspect_bits_per_weight(tmp_path):
    w = generate(RngSpec.gaussian(7), [96, 96])
    cases = {
        "sherry": (sherry_quantize(w), 1.25),
        "seq2": (seq_quantize(w), 2.0),
        "ternary": (ternarize(w), 2.0),
        "tl2": (quantize_tl2(w), 5.0 / 3.0),
    }
    for name, (q, bpw) in cases.items():
        p = tmp_path / f"{name}.asq"
        write_asq(p, q)
        rep = inspect_asq(p)
        assert rep["scheme"] == name
        assert rep["dims"] == [96, 96]
        assert abs(rep["bits_per_weight_payload"] - bpw) <= 1e-4
        assert rep["bits_per_weight_effective"] > rep["bits_per_weight_payload"]
        assert rep["total_bytes"] == p.stat().st_size


def test_tiny_payload_arithmetic(tmp_path):
    from lowbit.asq import SCHEME_SEQ2, SCHEME_SHERRY, payload_nbytes

    assert payload_nbytes(SCHEME_SEQ2, (1, 4)) == 1  # 4 codes x 2 bits
    assert payload_nbytes(SCHEME_SHERRY, (4096, 4096)) == 2_621_440


def test_scheme_name_helper():
    assert scheme_name(ternarize(W)) == "ternary"
    assert scheme_name(quantize_tl2(W)) == "tl2"
    assert scheme_name(seq_quantize(W)) == "seq2"
    assert scheme_name(sherry_quantize(W)) == "sherry"
