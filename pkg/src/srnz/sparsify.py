"""Anchor-grid sparsification: the lossless skeleton of the hierarchy.

Anchors are the grid points whose every index is a multiple of the anchor
stride. They are stored exactly and never re-predicted, so the hierarchical
expansion always grows from exact values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import DataGrid

__all__ = ["AnchorGrid", "anchor_shape_for", "sparsify", "embed_anchors"]


def _check_stride(stride: int) -> int:
    stride = int(stride)
    if stride < 2 or stride & (stride - 1):
        raise ConfigError(f"anchor stride must be a power of two >= 2, got {stride}")
    return stride


def anchor_shape_for(shape: tuple[int, ...], stride: int) -> tuple[int, ...]:
    """Extent of the anchor lattice per axis: floor((n - 1) / stride) + 1."""
    stride = _check_stride(stride)
    return tuple((n - 1) // stride + 1 for n in shape)


def anchor_slices(ndims: int, stride: int) -> tuple[slice, ...]:
    return (slice(0, None, stride),) * ndims


@dataclass(frozen=True, eq=False)
class AnchorGrid:
    """Values at the stride-aligned lattice, kept at full 64-bit precision."""

    stride: int
    values: np.ndarray  # float64, shaped like the anchor lattice

    @property
    def anchor_shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def count(self) -> int:
        return self.values.size


def sparsify(grid: DataGrid, stride: int) -> AnchorGrid:
    """Extract the anchor lattice of ``grid`` at the given power-of-two stride."""
    stride = _check_stride(stride)
    vals = grid.values[anchor_slices(grid.ndims, stride)].copy()
    vals.flags.writeable = False
    return AnchorGrid(stride, vals)


def embed_anchors(target: DataGrid, anchors: AnchorGrid) -> DataGrid:
    """Write anchor values into their lattice positions of ``target``.

    The anchor lattice must match the target shape exactly; embedding is
    idempotent because anchors are exact copies.
    """
    expected = anchor_shape_for(target.shape, anchors.stride)
    if expected != anchors.anchor_shape:
        raise ConfigError(
            f"anchor lattice {anchors.anchor_shape} does not fit grid"
            f" {target.shape} at stride {anchors.stride} (expected {expected})"
        )
    out = target.values.copy()
    out[anchor_slices(target.ndims, anchors.stride)] = anchors.values
    return DataGrid(out, target.source_precision)
