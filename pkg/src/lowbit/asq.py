"""ASQ: bit-exact container files for packed quantized tensors.

Layout (all multi-byte fields little-endian):

    magic "ASQ1" | version u8 = 1 | scheme u8 | ndim u8 | dims ndim x u64
    | scale_layout u8 = 0x01 (per-row) | scale_count u32 | scales f32 x count
    | metadata_len u32 | metadata UTF-8 JSON | payload bitstream

Payload widths per scheme (bits per weight): ternary 2 (codes 00 -> -1,
01 -> 0, 10 -> +1, 11 reserved), seq2 2, sherry 1.25 (5-bit block codes),
tl2 5/3 (base-3 triples, flat row-major stream, zero-padded to a multiple
of three weights). The bitstream pads to a byte boundary once per tensor,
so payload length is fully determined by scheme and dims; readers verify
it exactly. Files are written atomically (temp file + rename).
"""
from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from . import bitpack
from .seq2 import SeqTensor
from .sherry import SherryTensor, Tl2Tensor, tl2_decode_stream, tl2_encode_stream
from .ternary import TernaryTensor

ASQ_MAGIC = b"ASQ1"
ASQ_VERSION = 1

SCHEME_TERNARY = 0x01
SCHEME_SEQ2 = 0x02
SCHEME_SHERRY = 0x03
SCHEME_TL2 = 0x04

SCHEME_NAMES = {
    SCHEME_TERNARY: "ternary",
    SCHEME_SEQ2: "seq2",
    SCHEME_SHERRY: "sherry",
    SCHEME_TL2: "tl2",
}
SCHEME_IDS = {name: sid for sid, name in SCHEME_NAMES.items()}

SCALE_LAYOUT_PER_ROW = 0x01


class AsqError(ValueError):
    """Base class for malformed or unsupported container files."""


class AsqBadMagicError(AsqError):
    pass


class AsqBadVersionError(AsqError):
    pass


class AsqBadSchemeError(AsqError):
    pass


class AsqTruncatedError(AsqError):
    """File ends inside the header, scales or metadata."""


class AsqPayloadLengthError(AsqError):
    """Payload byte count does not match the length derived from scheme + dims."""


def payload_code_bits(scheme: int, dims: tuple[int, int]) -> int:
    """Exact payload bit count before byte padding."""
    m, n = dims
    if scheme in (SCHEME_TERNARY, SCHEME_SEQ2):
        return m * n * 2
    if scheme == SCHEME_SHERRY:
        if n % 4 != 0:
            raise AsqError(f"sherry column count {n} not divisible by 4")
        return m * (n // 4) * 5
    if scheme == SCHEME_TL2:
        return ((m * n + 2) // 3) * 5
    raise AsqBadSchemeError(f"unsupported scheme id 0x{scheme:02x}")


def payload_nbytes(scheme: int, dims: tuple[int, int]) -> int:
    return (payload_code_bits(scheme, dims) + 7) // 8


def _canonical_json(meta: dict) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _ternary_meta(q: TernaryTensor) -> dict:
    meta = {
        "delta": [float(v) for v in q.threshold_delta],
        "lambda": float(q.lam),
        "deadzone_fraction": float(q.deadzone_mask.mean()),
    }
    if q.folded_bias is not None:
        meta["folded_bias"] = [float(v) for v in q.folded_bias]
    return meta


def _encode_payload(scheme: int, q) -> bytes:
    if scheme in (SCHEME_TERNARY, SCHEME_TL2):
        signs = q.signs if scheme == SCHEME_TERNARY else q.ternary.signs
        if scheme == SCHEME_TERNARY:
            return bitpack.pack_codes((signs.astype(np.int16) + 1).astype(np.uint8), 2)
        return bitpack.pack_codes(tl2_encode_stream(signs), 5)
    if scheme == SCHEME_SEQ2:
        return bitpack.pack_codes(q.codes, 2)
    if scheme == SCHEME_SHERRY:
        return bitpack.pack_codes(q.codes, 5)
    raise AsqBadSchemeError(f"unsupported scheme id 0x{scheme:02x}")


def _scheme_of(q) -> int:
    if isinstance(q, Tl2Tensor):
        return SCHEME_TL2
    if isinstance(q, TernaryTensor):
        return SCHEME_TERNARY
    if isinstance(q, SeqTensor):
        return SCHEME_SEQ2
    if isinstance(q, SherryTensor):
        return SCHEME_SHERRY
    raise AsqError(f"unsupported quantized tensor type {type(q).__name__}")


def scheme_name(q) -> str:
    return SCHEME_NAMES[_scheme_of(q)]


def write_asq(path, q) -> None:
    """Serialize a quantized tensor; the scheme is inferred from its type."""
    scheme = _scheme_of(q)
    if scheme == SCHEME_TL2:
        inner = q.ternary
        dims = inner.shape
        scales = inner.scale_alpha
        meta = _ternary_meta(inner)
    elif scheme == SCHEME_TERNARY:
        dims = q.shape
        scales = q.scale_alpha
        meta = _ternary_meta(q)
    elif scheme == SCHEME_SEQ2:
        dims = q.shape
        scales = q.scale
        meta = {}
    else:
        dims = q.shape
        scales = q.scale_alpha
        meta = {}
    meta_blob = _canonical_json(meta)
    payload = _encode_payload(scheme, q)
    expected = payload_nbytes(scheme, dims)
    if len(payload) != expected:
        raise AsqError(f"internal payload size error: {len(payload)} != {expected}")
    header = bytearray()
    header += ASQ_MAGIC
    header += struct.pack("<BBB", ASQ_VERSION, scheme, len(dims))
    for d in dims:
        header += struct.pack("<Q", d)
    header += struct.pack("<BI", SCALE_LAYOUT_PER_ROW, len(scales))
    header += np.asarray(scales, dtype="<f4").tobytes()
    header += struct.pack("<I", len(meta_blob))
    header += meta_blob

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".asq.tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(bytes(header))
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.blob):
            raise AsqTruncatedError(f"truncated file: unexpected end inside {what}")
        out = self.blob[self.off : self.off + n]
        self.off += n
        return out

    def rest(self) -> bytes:
        out = self.blob[self.off :]
        self.off = len(self.blob)
        return out


def _read_header(blob: bytes):
    cur = _Cursor(blob)
    magic = cur.take(4, "magic")
    if magic != ASQ_MAGIC:
        raise AsqBadMagicError("bad magic: not an ASQ file")
    version, scheme, ndim = struct.unpack("<BBB", cur.take(3, "version/scheme/ndim"))
    if version != ASQ_VERSION:
        raise AsqBadVersionError(f"unsupported version {version}")
    if scheme not in SCHEME_NAMES:
        raise AsqBadSchemeError(f"unsupported scheme id 0x{scheme:02x}")
    if ndim != 2:
        raise AsqError(f"expected 2-D tensor, header says ndim={ndim}")
    dims = tuple(
        struct.unpack("<Q", cur.take(8, "dims"))[0] for _ in range(ndim)
    )
    layout, scale_count = struct.unpack("<BI", cur.take(5, "scale header"))
    if layout != SCALE_LAYOUT_PER_ROW:
        raise AsqError(f"unsupported scale layout 0x{layout:02x}")
    if scale_count != dims[0]:
        raise AsqError(f"scale count {scale_count} does not match {dims[0]} rows")
    scales = np.frombuffer(cur.take(4 * scale_count, "scales"), dtype="<f4").astype(
        np.float32
    )
    (meta_len,) = struct.unpack("<I", cur.take(4, "metadata length"))
    meta_blob = cur.take(meta_len, "metadata")
    try:
        meta = json.loads(meta_blob.decode("utf-8")) if meta_len else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise AsqError(f"bad metadata: {e}") from e
    if not isinstance(meta, dict):
        raise AsqError("bad metadata: expected a JSON object")
    return scheme, dims, scales, meta, cur


def _decode_ternary_signs(payload: bytes, dims: tuple[int, int]) -> np.ndarray:
    m, n = dims
    codes = bitpack.unpack_codes(payload, 2, m * n)
    if codes.size and int(codes.max()) > 2:
        raise AsqError("reserved ternary code 0b11 in payload")
    return (codes.astype(np.int16) - 1).astype(np.int8).reshape(m, n)


def _ternary_from_meta(
    signs: np.ndarray, scales: np.ndarray, meta: dict, dims: tuple[int, int]
) -> TernaryTensor:
    delta = np.asarray(meta.get("delta", [0.0] * dims[0]), dtype=np.float32)
    if delta.shape != (dims[0],):
        raise AsqError("bad metadata: delta length does not match rows")
    lam = float(meta.get("lambda", 0.0))
    folded = meta.get("folded_bias")
    bias = None
    if folded is not None:
        bias = np.asarray(folded, dtype=np.float32)
        if bias.shape != (dims[0],):
            raise AsqError("bad metadata: folded_bias length does not match rows")
    return TernaryTensor(
        signs=signs,
        scale_alpha=scales,
        threshold_delta=delta,
        deadzone_mask=signs == 0,
        lam=lam,
        folded_bias=bias,
    )


def read_asq(path):
    """Read back a quantized tensor; returns the scheme-specific object."""
    with open(path, "rb") as f:
        blob = f.read()
    scheme, dims, scales, meta, cur = _read_header(blob)
    payload = cur.rest()
    expected = payload_nbytes(scheme, dims)
    if len(payload) != expected:
        raise AsqPayloadLengthError(
            f"payload length mismatch: have {len(payload)} bytes, expected {expected}"
        )
    m, n = dims
    if scheme == SCHEME_TERNARY:
        signs = _decode_ternary_signs(payload, dims)
        return _ternary_from_meta(signs, scales, meta, dims)
    if scheme == SCHEME_TL2:
        n_codes = (m * n + 2) // 3
        codes = bitpack.unpack_codes(payload, 5, n_codes)
        signs = tl2_decode_stream(codes.astype(np.uint8), m * n).reshape(m, n)
        return Tl2Tensor(_ternary_from_meta(signs, scales, meta, dims))
    if scheme == SCHEME_SEQ2:
        codes = bitpack.unpack_codes(payload, 2, m * n).astype(np.uint8).reshape(m, n)
        return SeqTensor(codes, scales)
    codes = bitpack.unpack_codes(payload, 5, m * (n // 4))
    if codes.size and int(codes.max()) >= 32:
        raise AsqError("invalid sherry block code in payload")
    return SherryTensor(codes.astype(np.uint8).reshape(m, n // 4), scales)


def inspect_asq(path) -> dict:
    """Header-level report: scheme, dims, payload and effective bits/weight."""
    with open(path, "rb") as f:
        blob = f.read()
    scheme, dims, _scales, _meta, cur = _read_header(blob)
    payload_len = len(blob) - cur.off
    expected = payload_nbytes(scheme, dims)
    if payload_len != expected:
        raise AsqPayloadLengthError(
            f"payload length mismatch: have {payload_len} bytes, expected {expected}"
        )
    m, n = dims
    weights = m * n
    return {
        "scheme": SCHEME_NAMES[scheme],
        "dims": list(dims),
        "bits_per_weight_payload": payload_code_bits(scheme, dims) / weights,
        "total_bytes": len(blob),
        "bits_per_weight_effective": len(blob) * 8 / weights,
    }
