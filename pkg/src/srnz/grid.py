"""Grid container, error-bound resolution, and value-range utilities.

All pipeline arithmetic runs on 64-bit copies of the data regardless of
the source precision; the source precision is remembered so reconstructed
output can be cast back at the very end.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, IngestionError

__all__ = [
    "SOURCE_DTYPES",
    "DataGrid",
    "ErrorBoundSpec",
    "NormalizationParams",
    "vrange",
    "normalize",
    "denormalize",
    "read_raw",
    "write_raw",
]

# Raw files are headerless little-endian row-major scalar streams.
SOURCE_DTYPES = {
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
}

MAX_NDIMS = 3


def _as_internal(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=np.float64)
    if out is values:
        out = values.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class DataGrid:
    """An immutable 1-3 dimensional scalar field.

    ``values`` is always float64 and read-only; ``source_precision`` is the
    on-disk scalar type ("f32" or "f64") the grid was ingested from and will
    be emitted back to.
    """

    values: np.ndarray
    source_precision: str = "f64"

    def __post_init__(self) -> None:
        if self.source_precision not in SOURCE_DTYPES:
            raise ConfigError(
                f"unknown source precision {self.source_precision!r};"
                f" expected one of {sorted(SOURCE_DTYPES)}"
            )
        arr = np.asarray(self.values)
        if arr.ndim < 1 or arr.ndim > MAX_NDIMS:
            raise ConfigError(
                f"grids must have 1 to {MAX_NDIMS} dimensions, got {arr.ndim}"
            )
        if arr.size == 0:
            raise ConfigError(f"grid has an empty extent: shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.floating) and not np.issubdtype(
            arr.dtype, np.integer
        ):
            raise IngestionError(f"grid dtype {arr.dtype} is not numeric")
        if not np.isfinite(arr).all():
            bad = int(np.count_nonzero(~np.isfinite(arr)))
            raise IngestionError(
                f"grid contains {bad} non-finite value(s); NaN/Inf are not representable"
            )
        object.__setattr__(self, "values", _as_internal(arr))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndims(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def source_dtype(self) -> np.dtype:
        return SOURCE_DTYPES[self.source_precision]

    def to_source(self) -> np.ndarray:
        """Values cast to the source precision (little-endian, row-major)."""
        return self.values.astype(self.source_dtype)


@dataclass(frozen=True)
class ErrorBoundSpec:
    """Requested error bound: absolute, or relative to the value range.

    ``resolved_e`` is the absolute bound actually enforced; it is filled in
    by :meth:`resolve` against a concrete grid.
    """

    mode: str  # "abs" | "rel"
    epsilon: float
    resolved_e: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("abs", "rel"):
            raise ConfigError(f"error-bound mode must be 'abs' or 'rel', got {self.mode!r}")
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps < 0:
            raise ConfigError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")

    @classmethod
    def absolute(cls, epsilon: float) -> "ErrorBoundSpec":
        return cls("abs", float(epsilon))

    @classmethod
    def relative(cls, epsilon: float) -> "ErrorBoundSpec":
        return cls("rel", float(epsilon))

    def resolve(self, grid: DataGrid) -> "ErrorBoundSpec":
        """Pin the absolute bound for ``grid``: rel bounds scale by its range."""
        if self.mode == "abs":
            e = float(self.epsilon)
        else:
            e = float(self.epsilon) * vrange(grid)
        return replace(self, resolved_e=e)


@dataclass(frozen=True)
class NormalizationParams:
    """Affine map parameters taking a grid into [0, 1]: x -> (x - minimum) / vrange."""

    minimum: float
    vrange: float


def vrange(grid: DataGrid | np.ndarray) -> float:
    """max - min of the field, as float64. Zero for constant fields."""
    arr = grid.values if isinstance(grid, DataGrid) else np.asarray(grid, dtype=np.float64)
    return float(arr.max() - arr.min())


def normalize(grid: DataGrid) -> tuple[DataGrid, NormalizationParams]:
    """Map ``grid`` into [0, 1]; the params allow the inverse affine map.

    Constant grids are rejected: a zero range cannot be normalized and the
    engine short-circuits them before ever reaching this point.
    """
    arr = grid.values
    lo = float(arr.min())
    rng = float(arr.max() - arr.min())
    if rng <= 0.0:
        raise ConfigError("cannot normalize a constant grid (zero value range)")
    out = (arr - lo) / rng
    return DataGrid(out, grid.source_precision), NormalizationParams(lo, rng)


def denormalize(grid: DataGrid | np.ndarray, params: NormalizationParams) -> DataGrid:
    """Inverse of :func:`normalize`: y -> y * vrange + minimum."""
    if isinstance(grid, DataGrid):
        arr, prec = grid.values, grid.source_precision
    else:
        arr, prec = np.asarray(grid, dtype=np.float64), "f64"
    return DataGrid(arr * params.vrange + params.minimum, prec)


def read_raw(path: str | os.PathLike, precision: str, shape: tuple[int, ...]) -> DataGrid:
    """Ingest a headerless little-endian row-major scalar file.

    The file length must equal the product of ``shape`` times the scalar
    size; any mismatch is reported with both byte counts.
    """
    if precision not in SOURCE_DTYPES:
        raise ConfigError(f"unknown precision {precision!r}; expected one of {sorted(SOURCE_DTYPES)}")
    dtype = SOURCE_DTYPES[precision]
    count = int(np.prod(shape, dtype=np.int64)) if shape else 0
    if count <= 0:
        raise ConfigError(f"invalid shape {shape}: all extents must be >= 1")
    expected = count * dtype.itemsize
    actual = os.path.getsize(path)
    if actual != expected:
        raise IngestionError(
            f"{path}: file holds {actual} bytes but shape {tuple(shape)} at"
            f" {precision} requires {expected} bytes"
        )
    arr = np.fromfile(path, dtype=dtype).reshape(shape)
    return DataGrid(arr, precision)


def write_raw(grid: DataGrid, path: str | os.PathLike) -> None:
    """Emit the grid as headerless little-endian bytes at its source precision."""
    grid.to_source().tofile(path)
