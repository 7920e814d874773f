"""Compressed artifact container: header codec and payload framing.

Artifact layout (little-endian throughout)::

    4s   magic "SRNZ"
    u16  format version (currently 1)
    u8   flags: bit0 = constant grid, bit1 = degraded (SR fell back to interp)
    u8   source dtype: 0 = f32, 1 = f64
    u8   number of dimensions (1..3)
    u64* shape, one per dimension
    u8   error-bound mode: 0 = abs, 1 = rel
    f64  requested epsilon
    f64  resolved absolute bound
    u16  anchor stride
    u32  quantizer radius
    f64  normalization minimum
    f64  normalization range
    u8   number of refinement levels
    per level:
        u16  coarse stride
        u8   step kind: 0 = interpolation, 1 = super-resolution
        u8   interpolation method code (255 on SR steps)
        32B  model content hash (zeros on interpolation steps)
        u8   model noise tier byte
    f64  constant value          -- present only when flags bit0 is set
    32B  SHA-256 of the compressed payload
    u64  compressed payload byte length
    ...  payload (one zstd frame)

The decompressed payload is three length-prefixed sections:
``u64 n, anchors`` (source-precision scalars), ``u64 n, symbol stream``
(canonical Huffman), ``u64 n, outliers``. Outliers are ``u64 count``
followed by (varint absolute code ordinal, f64 value) records in
ascending ordinal order. The header alone is enough to replay the level
plan, so no per-level metadata hides in the payload.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .entropy import lossless_unwrap, lossless_wrap, read_varint, write_varint
from .errors import ConfigError, CorruptArtifactError, InternalError
from .grid import SOURCE_DTYPES
from .interpolation import CUBIC, LINEAR, MULTIDIM

__all__ = [
    "ARTIFACT_MAGIC",
    "ARTIFACT_VERSION",
    "LevelRecord",
    "ArtifactHeader",
    "write_artifact",
    "read_artifact",
    "pack_sections",
    "unpack_sections",
    "encode_outliers",
    "decode_outliers",
]

ARTIFACT_MAGIC = b"SRNZ"
ARTIFACT_VERSION = 1

FLAG_CONSTANT = 0x01
FLAG_DEGRADED = 0x02

_DTYPE_CODES = {"f32": 0, "f64": 1}
_DTYPE_NAMES = {v: k for k, v in _DTYPE_CODES.items()}
_EB_CODES = {"abs": 0, "rel": 1}
_EB_NAMES = {v: k for k, v in _EB_CODES.items()}
_METHOD_CODES = {CUBIC: 0, LINEAR: 1, MULTIDIM: 2}
_METHOD_NAMES = {v: k for k, v in _METHOD_CODES.items()}
_SR_METHOD_CODE = 255

_ZERO_HASH = bytes(32)


@dataclass(frozen=True)
class LevelRecord:
    """One refinement step as recorded in the header."""

    stride: int  # coarse stride feeding this step
    kind: str  # "interp" | "sr"
    method: str | None = None  # interpolation method, None on SR steps
    model_hash: bytes = _ZERO_HASH
    noise_tier: str = "none"

    def __post_init__(self):
        if self.kind not in ("interp", "sr"):
            raise InternalError(f"unknown step kind {self.kind!r}")
        if self.kind == "interp" and self.method not in _METHOD_CODES:
            raise InternalError(f"interp step needs a method, got {self.method!r}")
        if len(self.model_hash) != 32:
            raise InternalError("model hash must be 32 bytes")


@dataclass(frozen=True)
class ArtifactHeader:
    precision: str
    shape: tuple[int, ...]
    eb_mode: str
    epsilon: float
    resolved_e: float
    anchor_stride: int
    quant_radius: int
    norm_min: float
    norm_range: float
    levels: tuple[LevelRecord, ...] = ()
    constant: bool = False
    degraded: bool = False
    constant_value: float = 0.0

    def __post_init__(self):
        if self.precision not in _DTYPE_CODES:
            raise ConfigError(f"unknown precision {self.precision!r}")
        if self.eb_mode not in _EB_CODES:
            raise ConfigError(f"unknown error-bound mode {self.eb_mode!r}")
        if not 1 <= len(self.shape) <= 3:
            raise ConfigError(f"shape must have 1-3 dimensions, got {self.shape}")

    @property
    def element_count(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))


def _tier_byte(tier: str) -> int:
    from .bundle import NOISE_TIERS

    return NOISE_TIERS.index(tier)


def _tier_name(byte: int) -> str:
    from .bundle import NOISE_TIERS

    if byte >= len(NOISE_TIERS):
        raise CorruptArtifactError(f"unknown noise tier byte {byte}")
    return NOISE_TIERS[byte]


def _encode_header(header: ArtifactHeader) -> bytes:
    flags = (FLAG_CONSTANT if header.constant else 0) | (
        FLAG_DEGRADED if header.degraded else 0
    )
    out = bytearray(ARTIFACT_MAGIC)
    out += struct.pack("<HBBB", ARTIFACT_VERSION, flags, _DTYPE_CODES[header.precision], len(header.shape))
    for s in header.shape:
        out += struct.pack("<Q", s)
    out += struct.pack(
        "<BddHIdd",
        _EB_CODES[header.eb_mode],
        header.epsilon,
        header.resolved_e,
        header.anchor_stride,
        header.quant_radius,
        header.norm_min,
        header.norm_range,
    )
    out += struct.pack("<B", len(header.levels))
    for lv in header.levels:
        kind_byte = 0 if lv.kind == "interp" else 1
        method_byte = _SR_METHOD_CODE if lv.kind == "sr" else _METHOD_CODES[lv.method]
        out += struct.pack("<HBB", lv.stride, kind_byte, method_byte)
        out += lv.model_hash
        out += struct.pack("<B", _tier_byte(lv.noise_tier))
    if header.constant:
        out += struct.pack("<d", header.constant_value)
    return bytes(out)


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CorruptArtifactError("artifact truncated inside the header")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _decode_header(blob: bytes) -> tuple[ArtifactHeader, int]:
    cur = _Cursor(blob)
    if cur.take(4) != ARTIFACT_MAGIC:
        raise CorruptArtifactError("not a compressed-grid artifact (bad magic)")
    version, flags, dtype_byte, nd = cur.unpack("<HBBB")
    if version != ARTIFACT_VERSION:
        raise CorruptArtifactError(f"unsupported artifact version {version}")
    if dtype_byte not in _DTYPE_NAMES:
        raise CorruptArtifactError(f"unknown dtype code {dtype_byte}")
    if not 1 <= nd <= 3:
        raise CorruptArtifactError(f"invalid dimension count {nd}")
    shape = tuple(cur.unpack("<Q")[0] for _ in range(nd))
    if any(s < 1 for s in shape):
        raise CorruptArtifactError(f"invalid shape {shape}")
    eb_byte, epsilon, resolved_e, stride, radius, nmin, nrange = cur.unpack("<BddHIdd")
    if eb_byte not in _EB_NAMES:
        raise CorruptArtifactError(f"unknown error-bound mode byte {eb_byte}")
    (n_levels,) = cur.unpack("<B")
    levels = []
    for _ in range(n_levels):
        lstride, kind_byte, method_byte = cur.unpack("<HBB")
        model_hash = cur.take(32)
        (tier_byte,) = cur.unpack("<B")
        if kind_byte == 1:
            if method_byte != _SR_METHOD_CODE:
                raise CorruptArtifactError("SR level carries an interpolation method")
            levels.append(
                LevelRecord(lstride, "sr", None, model_hash, _tier_name(tier_byte))
            )
        elif kind_byte == 0:
            if method_byte not in _METHOD_NAMES:
                raise CorruptArtifactError(f"unknown method code {method_byte}")
            levels.append(
                LevelRecord(
                    lstride, "interp", _METHOD_NAMES[method_byte], model_hash, _tier_name(tier_byte)
                )
            )
        else:
            raise CorruptArtifactError(f"unknown step kind byte {kind_byte}")
    constant = bool(flags & FLAG_CONSTANT)
    degraded = bool(flags & FLAG_DEGRADED)
    constant_value = 0.0
    if constant:
        (constant_value,) = cur.unpack("<d")
    header = ArtifactHeader(
        precision=_DTYPE_NAMES[dtype_byte],
        shape=shape,
        eb_mode=_EB_NAMES[eb_byte],
        epsilon=epsilon,
        resolved_e=resolved_e,
        anchor_stride=stride,
        quant_radius=radius,
        norm_min=nmin,
        norm_range=nrange,
        levels=tuple(levels),
        constant=constant,
        degraded=degraded,
        constant_value=constant_value,
    )
    return header, cur.pos


def write_artifact(header: ArtifactHeader, payload_plain: bytes, zstd_level: int = 3) -> bytes:
    """Assemble the final artifact: header, payload digest, zstd frame.

    Constant-grid artifacts carry no payload at all, not even an empty
    frame; their digest covers zero bytes.
    """
    compressed = lossless_wrap(payload_plain, level=zstd_level) if payload_plain else b""
    digest = hashlib.sha256(compressed).digest()
    return (
        _encode_header(header)
        + digest
        + struct.pack("<Q", len(compressed))
        + compressed
    )


def read_artifact(blob: bytes) -> tuple[ArtifactHeader, bytes]:
    """Parse an artifact, verify the payload digest, return plain payload."""
    header, pos = _decode_header(blob)
    if pos + 32 + 8 > len(blob):
        raise CorruptArtifactError("artifact truncated before the payload digest")
    digest = blob[pos : pos + 32]
    (plen,) = struct.unpack_from("<Q", blob, pos + 32)
    start = pos + 40
    if start + plen != len(blob):
        raise CorruptArtifactError(
            f"payload length mismatch: header says {plen} bytes,"
            f" artifact holds {len(blob) - start}"
        )
    compressed = blob[start:]
    if hashlib.sha256(compressed).digest() != digest:
        raise CorruptArtifactError("payload digest mismatch; artifact is corrupt")
    if header.constant:
        if plen:
            raise CorruptArtifactError("constant-grid artifact carries a payload")
        return header, b""
    # anchors (<= full grid at 8B) + symbols (<= ~2B each safe bound) + slack
    n = header.element_count
    cap = 64 + n * 8 + n * 10 + 4096
    plain = lossless_unwrap(compressed, max_output=cap)
    return header, plain


# ---------------------------------------------------------------------------
# payload sections


def pack_sections(anchors: bytes, symbols: bytes, outliers: bytes) -> bytes:
    out = bytearray()
    for section in (anchors, symbols, outliers):
        out += struct.pack("<Q", len(section))
        out += section
    return bytes(out)


def unpack_sections(blob: bytes) -> tuple[bytes, bytes, bytes]:
    sections = []
    pos = 0
    for _ in range(3):
        if pos + 8 > len(blob):
            raise CorruptArtifactError("payload section table truncated")
        (n,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        if pos + n > len(blob):
            raise CorruptArtifactError("payload section truncated")
        sections.append(blob[pos : pos + n])
        pos += n
    if pos != len(blob):
        raise CorruptArtifactError("trailing bytes after payload sections")
    return tuple(sections)


def encode_outliers(ordinals: np.ndarray, values: np.ndarray) -> bytes:
    """Serialize exact escape values keyed by absolute code ordinal."""
    if len(ordinals) != len(values):
        raise InternalError("outlier ordinal/value length mismatch")
    out = bytearray(struct.pack("<Q", len(ordinals)))
    prev = -1
    for ordinal, value in zip(ordinals, values):
        o = int(ordinal)
        if o <= prev:
            raise InternalError("outlier ordinals must be strictly increasing")
        prev = o
        write_varint(out, o)
        out += struct.pack("<d", float(value))
    return bytes(out)


def decode_outliers(blob: bytes) -> tuple[np.ndarray, np.ndarray]:
    if len(blob) < 8:
        raise CorruptArtifactError("outlier section truncated")
    (count,) = struct.unpack_from("<Q", blob, 0)
    pos = 8
    ordinals = np.empty(count, dtype=np.int64)
    values = np.empty(count, dtype=np.float64)
    prev = -1
    for i in range(count):
        o, pos = read_varint(blob, pos)
        if pos + 8 > len(blob):
            raise CorruptArtifactError("outlier record truncated")
        (v,) = struct.unpack_from("<d", blob, pos)
        pos += 8
        if o <= prev:
            raise CorruptArtifactError("outlier ordinals out of order")
        prev = o
        ordinals[i] = o
        values[i] = v
    if pos != len(blob):
        raise CorruptArtifactError("trailing bytes after outlier records")
    return ordinals, values
