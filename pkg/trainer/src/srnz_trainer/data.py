"""Training data preparation.

Grids arrive as raw little-endian float files with JSON sidecars (the
format the compressor's ``gen`` command writes). Preparation normalizes
each grid to [0, 1], decomposes 3D grids into 2D slices along all three
axes, tiles oversized slices down to the tile limit, and drops anything
constant. Training pairs are then even-index subsamples: the
low-resolution input IS the high-resolution crop at even indices, the
same coincidence the compressor relies on, optionally corrupted with
Gaussian noise. No flip or rotation augmentation is applied anywhere.
"""
from __future__ import annotations

import json
import logging
import math
import os
from glob import glob

import numpy as np

from .errors import ConfigError, DataError

log = logging.getLogger("srnz_trainer.data")

DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


def load_field(json_path) -> np.ndarray:
    """Read one raw grid via its sidecar; float64, any rank the file has."""
    with open(json_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    shape = tuple(int(s) for s in doc["shape"])
    dtype = DTYPES[doc.get("precision", "f32")]
    raw = os.path.join(os.path.dirname(str(json_path)), doc["data_file"])
    values = np.fromfile(raw, dtype=dtype)
    if values.size != int(np.prod(shape)):
        raise DataError(f"{raw}: holds {values.size} values, sidecar says {shape}")
    return values.reshape(shape).astype(np.float64)


def tile_slice(sl: np.ndarray, tile: int) -> list[np.ndarray]:
    """Cut a 2D slice into tile x tile pieces; edge tiles are reflection
    padded to full size. Slices already within the limit pass through."""
    h, w = sl.shape
    if h <= tile and w <= tile:
        return [sl]
    tiles = []
    for i in range(math.ceil(h / tile)):
        for j in range(math.ceil(w / tile)):
            piece = sl[i * tile : (i + 1) * tile, j * tile : (j + 1) * tile]
            ph, pw = tile - piece.shape[0], tile - piece.shape[1]
            if ph or pw:
                piece = np.pad(piece, ((0, ph), (0, pw)), mode="reflect")
            tiles.append(piece)
    return tiles


def _grid_slices(grid: np.ndarray) -> list[np.ndarray]:
    if grid.ndim == 2:
        return [grid]
    out = []
    for axis in range(3):
        for i in range(grid.shape[axis]):
            out.append(np.take(grid, i, axis=axis))
    return out


def prepare_slices(data_dir, tile_size: int = 480) -> list[np.ndarray]:
    """Build the slice store from every sidecar under ``data_dir``.

    Unreadable or unsupported inputs are skipped with a log entry
    rather than failing the whole run; constant grids and constant
    slices carry no training signal and are dropped the same way.
    """
    store: list[np.ndarray] = []
    sidecars = sorted(glob(os.path.join(str(data_dir), "*.json")))
    if not sidecars:
        raise DataError(f"no field sidecars (*.json) under {data_dir}")
    for path in sidecars:
        try:
            grid = load_field(path)
        except (OSError, KeyError, ValueError, DataError) as exc:
            log.warning("skipping %s: %s", path, exc)
            continue
        if grid.ndim not in (2, 3):
            log.warning("skipping %s: rank %d grid, need 2D or 3D", path, grid.ndim)
            continue
        lo, hi = float(grid.min()), float(grid.max())
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi == lo:
            log.warning("skipping %s: constant or non-finite grid", path)
            continue
        normalized = (grid - lo) / (hi - lo)
        for sl in _grid_slices(normalized):
            for piece in tile_slice(sl, tile_size):
                if piece.max() == piece.min():
                    log.warning("dropping a constant slice from %s", path)
                    continue
                store.append(np.ascontiguousarray(piece, dtype=np.float32))
    if not store:
        raise DataError(f"no usable training slices under {data_dir}")
    return store


def make_pair(hr_crop: np.ndarray, sigma: float, rng: np.random.Generator):
    """One training pair from an odd-extent crop.

    The LR input is the crop at even indices (bit-exact before noise);
    sigma scales Gaussian corruption of the LR side only.
    """
    if any(s % 2 == 0 or s < 3 for s in hr_crop.shape):
        raise ConfigError(f"crop extents must be odd and >= 3, got {hr_crop.shape}")
    lr = hr_crop[0::2, 0::2].astype(np.float32, copy=True)
    if sigma > 0:
        lr += (sigma * rng.standard_normal(lr.shape)).astype(np.float32)
    return lr, hr_crop.astype(np.float32, copy=False)


class PairSampler:
    """Draws (noisy LR, HR) batches from the slice store.

    Crops are plain subarrays: per pair the sampler draws a slice index
    and a top-left offset (in that order) from its generator, then odd
    trims the crop. Nothing is flipped, rotated, or resampled.
    """

    def __init__(self, store, crop_size: int, sigma: float, rng: np.random.Generator):
        if crop_size % 2:
            raise ConfigError(f"crop_size must be even, got {crop_size}")
        self.crop = crop_size
        self.m = crop_size // 2
        self.sigma = float(sigma)
        self.rng = rng
        self.usable = [s for s in store if s.shape[0] >= crop_size and s.shape[1] >= crop_size]
        if not self.usable:
            raise DataError(
                f"no slice is at least {crop_size}x{crop_size};"
                " lower crop_size or provide larger fields"
            )

    def batch(self, n: int):
        m = self.m
        lrs = np.empty((n, 1, m, m), dtype=np.float32)
        hrs = np.empty((n, 1, 2 * m - 1, 2 * m - 1), dtype=np.float32)
        for b in range(n):
            sl = self.usable[int(self.rng.integers(len(self.usable)))]
            i = int(self.rng.integers(sl.shape[0] - self.crop + 1))
            j = int(self.rng.integers(sl.shape[1] - self.crop + 1))
            hr = sl[i : i + 2 * m - 1, j : j + 2 * m - 1]
            lrs[b, 0], hrs[b, 0] = make_pair(hr, self.sigma, self.rng)
        return lrs, hrs
