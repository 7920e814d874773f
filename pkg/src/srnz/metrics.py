"""Fidelity and rate metrics for compression runs.

Size fields are kept as exact integers so derived ratios stay honestly
computable: compression_ratio * bit_rate equals the source's bits per
element as a rational identity over (original_bytes, compressed_bytes,
element_count), even though the float properties individually round.

PSNR follows the range convention: 20*log10(value_range) - 10*log10(mse),
with +inf for a perfect reconstruction. The error histogram buckets the
signed errors over [-e, +e]; anything outside that interval is a bound
violation and counted separately.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import DataGrid, vrange

__all__ = [
    "EvalRecord",
    "psnr",
    "error_histogram",
    "build_record",
    "CSV_COLUMNS",
    "write_records_csv",
    "record_to_dict",
]

CSV_COLUMNS = (
    "name",
    "epsilon",
    "e",
    "cr",
    "bit_rate",
    "psnr",
    "max_err",
    "violations",
    "seconds_compress",
    "seconds_decompress",
)


@dataclass(frozen=True)
class EvalRecord:
    name: str
    epsilon: float
    resolved_e: float
    original_bytes: int
    compressed_bytes: int
    element_count: int
    element_bits: int
    max_abs_error: float
    mse: float
    value_range: float
    violations: int
    seconds_compress: float
    seconds_decompress: float

    @property
    def compression_ratio(self) -> float:
        return self.original_bytes / self.compressed_bytes

    @property
    def bit_rate(self) -> float:
        """Compressed bits spent per grid element."""
        return 8.0 * self.compressed_bytes / self.element_count

    @property
    def psnr(self) -> float:
        if self.mse == 0.0:
            return math.inf
        if self.value_range == 0.0:
            return -math.inf
        return 20.0 * math.log10(self.value_range) - 10.0 * math.log10(self.mse)


def psnr(original: DataGrid | np.ndarray, recon: DataGrid | np.ndarray) -> float:
    """Peak signal-to-noise ratio of a reconstruction, in dB."""
    a = original.values if isinstance(original, DataGrid) else np.asarray(original, dtype=np.float64)
    b = recon.values if isinstance(recon, DataGrid) else np.asarray(recon, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    mse = float(np.mean(diff * diff))
    rng = float(a.max() - a.min())
    if mse == 0.0:
        return math.inf
    if rng == 0.0:
        return -math.inf
    return 20.0 * math.log10(rng) - 10.0 * math.log10(mse)


def error_histogram(
    original: DataGrid | np.ndarray,
    recon: DataGrid | np.ndarray,
    e: float,
    bins: int = 32,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Histogram of signed errors over [-e, +e].

    Returns (counts, bin_edges, violations) where violations counts the
    errors with |err| > e; those fall outside every bucket by definition.
    """
    if e <= 0:
        raise ConfigError(f"histogram needs e > 0, got {e}")
    a = original.values if isinstance(original, DataGrid) else np.asarray(original, dtype=np.float64)
    b = recon.values if isinstance(recon, DataGrid) else np.asarray(recon, dtype=np.float64)
    err = (b - a).ravel()
    inside = np.abs(err) <= e
    counts, edges = np.histogram(err[inside], bins=bins, range=(-e, e))
    return counts, edges, int(err.size - int(inside.sum()))


def build_record(
    name: str,
    original: DataGrid,
    recon: DataGrid,
    artifact_size: int,
    epsilon: float,
    resolved_e: float,
    seconds_compress: float,
    seconds_decompress: float,
) -> EvalRecord:
    if original.shape != recon.shape:
        raise ConfigError(f"shape mismatch: {original.shape} vs {recon.shape}")
    diff = recon.values - original.values
    abs_err = np.abs(diff)
    bits = original.source_dtype.itemsize * 8
    return EvalRecord(
        name=name,
        epsilon=float(epsilon),
        resolved_e=float(resolved_e),
        original_bytes=original.size * original.source_dtype.itemsize,
        compressed_bytes=int(artifact_size),
        element_count=original.size,
        element_bits=bits,
        max_abs_error=float(abs_err.max()),
        mse=float(np.mean(diff * diff)),
        value_range=vrange(original),
        violations=int(np.count_nonzero(abs_err > resolved_e)),
        seconds_compress=float(seconds_compress),
        seconds_decompress=float(seconds_decompress),
    )


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".9g")


def record_to_dict(record: EvalRecord) -> dict:
    """Flat representation matching the CSV columns."""
    return {
        "name": record.name,
        "epsilon": _fmt(record.epsilon),
        "e": _fmt(record.resolved_e),
        "cr": _fmt(record.compression_ratio),
        "bit_rate": _fmt(record.bit_rate),
        "psnr": _fmt(record.psnr),
        "max_err": _fmt(record.max_abs_error),
        "violations": record.violations,
        "seconds_compress": _fmt(record.seconds_compress),
        "seconds_decompress": _fmt(record.seconds_decompress),
    }


def write_records_csv(records: list[EvalRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for record in records:
            writer.writerow(record_to_dict(record))
