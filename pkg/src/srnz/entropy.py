"""Entropy coding: canonical Huffman over quantizer symbols, Zstd wrapping.

Huffman section layout (all integers little-endian):

    u32     symbol count
    table   varint alphabet size, then run-length pairs (u8 code length,
            varint run) covering the whole alphabet; length 0 = absent
    u64     bit count
    bytes   ceil(bit_count / 8) payload bytes

Bits are packed LSB-first within each byte; each code is emitted starting
from its most significant bit. Code lengths come from a deterministic
Huffman merge (ties broken by insertion order), and codes are assigned
canonically: sorted by (length, symbol), so equal-length codes increase
with the symbol value.

The Zstd wrap binds the system reference library (libzstd) through ctypes
and produces standard RFC 8878 frames; Zstandard is integrated here, never
reimplemented.
"""
from __future__ import annotations

import ctypes
import ctypes.util
import heapq
import struct

import numpy as np

from .errors import ConfigError, CorruptStreamError, InternalError

__all__ = [
    "HuffmanTable",
    "huffman_encode",
    "huffman_decode",
    "encode_symbol_section",
    "decode_symbol_section",
    "lossless_wrap",
    "lossless_unwrap",
    "write_varint",
    "read_varint",
]

MAX_CODE_LEN = 64
_LUT_BITS = 16

DEFAULT_ZSTD_LEVEL = 3


# ---------------------------------------------------------------------------
# varint (unsigned LEB128), shared with the container writer


def write_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise InternalError(f"varint values are unsigned, got {value}")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise CorruptStreamError("truncated varint")
        byte = buf[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise CorruptStreamError("varint longer than 64 bits")


# ---------------------------------------------------------------------------
# canonical Huffman


def _huffman_lengths(counts: np.ndarray) -> np.ndarray:
    """Code lengths from symbol frequencies via deterministic tree merges."""
    lengths = np.zeros(counts.size, dtype=np.uint8)
    present = np.flatnonzero(counts > 0)
    if present.size == 0:
        return lengths
    if present.size == 1:
        # Degenerate alphabet: pair the symbol with a virtual padding
        # sibling so it still gets a one-bit code.
        lengths[present[0]] = 1
        return lengths
    # Heap items: (frequency, tie-break sequence, leaf symbols).
    heap: list[tuple[int, int, list[int]]] = [
        (int(counts[s]), int(s), [int(s)]) for s in present
    ]
    heapq.heapify(heap)
    seq = int(counts.size)
    depth = np.zeros(counts.size, dtype=np.int64)
    while len(heap) > 1:
        fa, _, la = heapq.heappop(heap)
        fb, _, lb = heapq.heappop(heap)
        merged = la + lb
        depth[merged] += 1
        heapq.heappush(heap, (fa + fb, seq, merged))
        seq += 1
    if depth.max() > MAX_CODE_LEN:
        raise InternalError("Huffman depth exceeded 64 bits")
    lengths[present] = depth[present]
    return lengths


def _canonical_codes(lengths: np.ndarray) -> np.ndarray:
    """Assign canonical codes: sorted by (length, symbol), increasing."""
    codes = np.zeros(lengths.size, dtype=np.uint64)
    coded = np.flatnonzero(lengths > 0)
    if coded.size == 0:
        return codes
    order = coded[np.argsort(lengths[coded], kind="stable")]
    code = 0
    prev_len = int(lengths[order[0]])
    for sym in order:
        ln = int(lengths[sym])
        code <<= ln - prev_len
        codes[sym] = code
        code += 1
        prev_len = ln
    return codes


def _reverse_bits(value: int, width: int) -> int:
    out = 0
    for _ in range(width):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


class HuffmanTable:
    """Canonical Huffman code book over a fixed symbol alphabet."""

    def __init__(self, lengths: np.ndarray):
        lengths = np.asarray(lengths, dtype=np.uint8)
        if lengths.ndim != 1:
            raise ConfigError("length table must be one-dimensional")
        if lengths.size and int(lengths.max()) > MAX_CODE_LEN:
            raise CorruptStreamError("code length exceeds 64 bits")
        self.lengths = lengths
        self.alphabet_size = int(lengths.size)
        self._validate_kraft()
        self.codes = _canonical_codes(lengths)
        self._decoder = None

    # -- construction -------------------------------------------------

    @classmethod
    def from_histogram(cls, counts: np.ndarray) -> "HuffmanTable":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.size == 0:
            raise ConfigError("alphabet must not be empty")
        if counts.min() < 0:
            raise ConfigError("negative symbol frequency")
        return cls(_huffman_lengths(counts))

    @classmethod
    def from_symbols(cls, symbols: np.ndarray, alphabet_size: int) -> "HuffmanTable":
        symbols = np.asarray(symbols, dtype=np.int64)
        if symbols.size and (symbols.min() < 0 or symbols.max() >= alphabet_size):
            raise ConfigError("symbol outside the declared alphabet")
        counts = np.bincount(symbols, minlength=alphabet_size)
        return cls.from_histogram(counts)

    def _validate_kraft(self) -> None:
        coded = self.lengths[self.lengths > 0]
        if coded.size == 0:
            return
        kraft = sum(1 << (MAX_CODE_LEN - int(ln)) for ln in coded)
        full = 1 << MAX_CODE_LEN
        if coded.size == 1:
            # Virtual padding symbol occupies the other half of the tree.
            if int(coded[0]) != 1:
                raise CorruptStreamError("degenerate table must use a 1-bit code")
            return
        if kraft != full:
            raise CorruptStreamError("code lengths violate Kraft equality")

    # -- serialization ------------------------------------------------

    def to_bytes(self) -> bytes:
        out = bytearray()
        write_varint(out, self.alphabet_size)
        lens = self.lengths
        i = 0
        while i < lens.size:
            j = i
            while j < lens.size and lens[j] == lens[i]:
                j += 1
            out.append(int(lens[i]))
            write_varint(out, j - i)
            i = j
        return bytes(out)

    @classmethod
    def from_bytes(cls, buf: bytes, pos: int = 0) -> tuple["HuffmanTable", int]:
        alphabet, pos = read_varint(buf, pos)
        if alphabet <= 0 or alphabet > 1 << 32:
            raise CorruptStreamError(f"implausible alphabet size {alphabet}")
        lengths = np.zeros(alphabet, dtype=np.uint8)
        filled = 0
        while filled < alphabet:
            if pos >= len(buf):
                raise CorruptStreamError("truncated Huffman length table")
            ln = buf[pos]
            pos += 1
            run, pos = read_varint(buf, pos)
            if run == 0 or filled + run > alphabet:
                raise CorruptStreamError("bad run in Huffman length table")
            if ln > MAX_CODE_LEN:
                raise CorruptStreamError("code length exceeds 64 bits")
            lengths[filled : filled + run] = ln
            filled += run
        return cls(lengths), pos

    # -- encode -------------------------------------------------------

    def encode(self, symbols: np.ndarray) -> tuple[bytes, int]:
        """Bit-pack ``symbols``; returns (payload bytes, bit count)."""
        symbols = np.asarray(symbols, dtype=np.int64)
        if symbols.size == 0:
            return b"", 0
        if symbols.min() < 0 or symbols.max() >= self.alphabet_size:
            raise ConfigError("symbol outside the table alphabet")
        lens = self.lengths[symbols].astype(np.int64)
        if int(lens.min()) == 0:
            raise ConfigError("symbol has no code in this table")
        codes = self.codes[symbols]
        starts = np.zeros(symbols.size, dtype=np.int64)
        np.cumsum(lens[:-1], out=starts[1:])
        total = int(lens.sum())
        bits = np.zeros(total, dtype=np.uint8)
        max_len = int(lens.max())
        for i in range(max_len):
            m = lens > i
            shift = (lens[m] - 1 - i).astype(np.uint64)
            bits[starts[m] + i] = ((codes[m] >> shift) & np.uint64(1)).astype(np.uint8)
        return np.packbits(bits, bitorder="little").tobytes(), total

    # -- decode -------------------------------------------------------

    def _build_decoder(self):
        coded = np.flatnonzero(self.lengths > 0)
        lut_sym = np.full(1 << _LUT_BITS, -1, dtype=np.int64)
        lut_len = np.zeros(1 << _LUT_BITS, dtype=np.int64)
        for sym in coded:
            ln = int(self.lengths[sym])
            rev = _reverse_bits(int(self.codes[sym]), ln)
            if ln <= _LUT_BITS:
                idx = rev + (np.arange(1 << (_LUT_BITS - ln), dtype=np.int64) << ln)
                lut_sym[idx] = sym
                lut_len[idx] = ln
            # Codes longer than the window keep the default escape entry
            # (-1) and fall through to the canonical bit-walk; prefix
            # freedom guarantees they never collide with a short code.
        # Canonical ladder for long codes.
        max_len = int(self.lengths.max()) if coded.size else 0
        first_code = [0] * (max_len + 2)
        index_offset = [0] * (max_len + 2)
        count = [0] * (max_len + 2)
        order = coded[np.argsort(self.lengths[coded], kind="stable")]
        by_len_symbols = order
        code = 0
        idx = 0
        for ln in range(1, max_len + 1):
            first_code[ln] = code
            index_offset[ln] = idx
            n = int(np.count_nonzero(self.lengths == ln))
            count[ln] = n
            code = (code + n) << 1
            idx += n
        self._decoder = (
            lut_sym.tolist(),
            lut_len.tolist(),
            first_code,
            index_offset,
            count,
            by_len_symbols.tolist(),
            max_len,
        )

    def decode(self, data: bytes, bit_count: int, n_symbols: int) -> np.ndarray:
        """Recover ``n_symbols`` symbols from an LSB-first packed payload."""
        if n_symbols == 0:
            if bit_count != 0:
                raise CorruptStreamError("empty stream with trailing bits")
            return np.zeros(0, dtype=np.int64)
        if bit_count > 8 * len(data):
            raise CorruptStreamError("bit count exceeds payload size")
        if self._decoder is None:
            self._build_decoder()
        lut_sym, lut_len, first_code, index_offset, count, order, max_len = self._decoder
        if max_len == 0:
            raise CorruptStreamError("stream uses an empty code table")
        buf = data + b"\x00" * 8
        out = np.empty(n_symbols, dtype=np.int64)
        pos = 0
        for i in range(n_symbols):
            byte = pos >> 3
            window = int.from_bytes(buf[byte : byte + 3], "little") >> (pos & 7)
            window &= 0xFFFF
            sym = lut_sym[window]
            ln = lut_len[window]
            if sym < 0 or ln == 0:
                sym, ln = self._decode_slow(buf, pos, bit_count, first_code, index_offset, count, order, max_len)
            if pos + ln > bit_count:
                raise CorruptStreamError("truncated Huffman stream")
            out[i] = sym
            pos += ln
        if pos != bit_count:
            raise CorruptStreamError("trailing bits after the final symbol")
        return out

    def _decode_slow(self, buf, pos, bit_count, first_code, index_offset, count, order, max_len):
        code = 0
        ln = 0
        while True:
            byte = (pos + ln) >> 3
            bit = (buf[byte] >> ((pos + ln) & 7)) & 1
            code = (code << 1) | bit
            ln += 1
            if ln > max_len:
                raise CorruptStreamError("invalid Huffman code in stream")
            if count[ln] and first_code[ln] <= code < first_code[ln] + count[ln]:
                return order[index_offset[ln] + code - first_code[ln]], ln


def huffman_encode(symbols: np.ndarray, alphabet_size: int) -> tuple[HuffmanTable, bytes, int]:
    """Build a canonical table for ``symbols`` and encode them."""
    table = HuffmanTable.from_symbols(symbols, alphabet_size)
    payload, bits = table.encode(symbols)
    return table, payload, bits


def huffman_decode(table: HuffmanTable, payload: bytes, bit_count: int, n_symbols: int) -> np.ndarray:
    return table.decode(payload, bit_count, n_symbols)


def encode_symbol_section(symbols: np.ndarray, alphabet_size: int) -> bytes:
    """Full self-delimiting section: count, table, bit count, payload."""
    symbols = np.asarray(symbols, dtype=np.int64)
    out = bytearray(struct.pack("<I", symbols.size))
    if symbols.size == 0:
        return bytes(out)
    table, payload, bits = huffman_encode(symbols, alphabet_size)
    out += table.to_bytes()
    out += struct.pack("<Q", bits)
    out += payload
    return bytes(out)


def decode_symbol_section(buf: bytes, pos: int = 0) -> tuple[np.ndarray, int]:
    if pos + 4 > len(buf):
        raise CorruptStreamError("truncated symbol section header")
    (n_symbols,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if n_symbols == 0:
        return np.zeros(0, dtype=np.int64), pos
    table, pos = HuffmanTable.from_bytes(buf, pos)
    if pos + 8 > len(buf):
        raise CorruptStreamError("truncated symbol section bit count")
    (bit_count,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    nbytes = (bit_count + 7) // 8
    if pos + nbytes > len(buf):
        raise CorruptStreamError("truncated symbol section payload")
    symbols = table.decode(buf[pos : pos + nbytes], bit_count, n_symbols)
    return symbols, pos + nbytes


# ---------------------------------------------------------------------------
# Zstd wrap (system libzstd via ctypes)

_ZSTD_CONTENTSIZE_UNKNOWN = 2**64 - 1
_ZSTD_CONTENTSIZE_ERROR = 2**64 - 2

_zstd_lib = None


def _zstd():
    global _zstd_lib
    if _zstd_lib is None:
        name = ctypes.util.find_library("zstd")
        if name is None:
            raise ConfigError(
                "libzstd shared library not found; install the system zstd library"
            )
        lib = ctypes.CDLL(name)
        lib.ZSTD_compressBound.restype = ctypes.c_size_t
        lib.ZSTD_compressBound.argtypes = [ctypes.c_size_t]
        lib.ZSTD_compress.restype = ctypes.c_size_t
        lib.ZSTD_compress.argtypes = [
            ctypes.c_char_p,
            ctypes.c_size_t,
            ctypes.c_char_p,
            ctypes.c_size_t,
            ctypes.c_int,
        ]
        lib.ZSTD_decompress.restype = ctypes.c_size_t
        lib.ZSTD_decompress.argtypes = [
            ctypes.c_char_p,
            ctypes.c_size_t,
            ctypes.c_char_p,
            ctypes.c_size_t,
        ]
        lib.ZSTD_isError.restype = ctypes.c_uint
        lib.ZSTD_isError.argtypes = [ctypes.c_size_t]
        lib.ZSTD_getErrorName.restype = ctypes.c_char_p
        lib.ZSTD_getErrorName.argtypes = [ctypes.c_size_t]
        lib.ZSTD_getFrameContentSize.restype = ctypes.c_ulonglong
        lib.ZSTD_getFrameContentSize.argtypes = [ctypes.c_char_p, ctypes.c_size_t]
        lib.ZSTD_maxCLevel.restype = ctypes.c_int
        _zstd_lib = lib
    return _zstd_lib


def lossless_wrap(payload: bytes, level: int = DEFAULT_ZSTD_LEVEL) -> bytes:
    """Wrap ``payload`` in one standard Zstandard frame."""
    lib = _zstd()
    level = int(level)
    if level < 1 or level > lib.ZSTD_maxCLevel():
        raise ConfigError(f"zstd level {level} outside 1..{lib.ZSTD_maxCLevel()}")
    bound = lib.ZSTD_compressBound(len(payload))
    dst = ctypes.create_string_buffer(bound)
    n = lib.ZSTD_compress(dst, bound, payload, len(payload), level)
    if lib.ZSTD_isError(n):
        raise InternalError(f"zstd compression failed: {lib.ZSTD_getErrorName(n).decode()}")
    return dst.raw[:n]


def lossless_unwrap(data: bytes, max_output: int | None = None) -> bytes:
    """Recover the payload of a Zstandard frame produced by lossless_wrap."""
    lib = _zstd()
    size = lib.ZSTD_getFrameContentSize(data, len(data))
    if size in (_ZSTD_CONTENTSIZE_UNKNOWN, _ZSTD_CONTENTSIZE_ERROR):
        raise CorruptStreamError("payload is not a complete Zstandard frame")
    if max_output is not None and size > max_output:
        raise CorruptStreamError(
            f"frame claims {size} bytes, more than the plausible {max_output}"
        )
    dst = ctypes.create_string_buffer(max(1, size))
    n = lib.ZSTD_decompress(dst, size, data, len(data))
    if lib.ZSTD_isError(n):
        raise CorruptStreamError(
            f"zstd decode failed: {lib.ZSTD_getErrorName(n).decode()}"
        )
    if n != size:
        raise CorruptStreamError("zstd frame decoded to an unexpected size")
    return dst.raw[:n]
