"""Estimator-style facade over the compression engine.

GridCompressor follows the fit/transform idiom so it can sit in sklearn
pipelines and parameter searches: constructor parameters are stored
verbatim, ``fit`` only validates them (compression is stateless per
grid), ``transform`` maps an array to artifact bytes and
``inverse_transform`` maps artifact bytes back to an array.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .engine import (
    DEFAULT_ANCHOR_STRIDE,
    CompressionOptions,
    compress,
    decompress,
)
from .errors import ConfigError
from .grid import DataGrid, ErrorBoundSpec
from .quantize import DEFAULT_RADIUS
from .registry import ModelRegistry

__all__ = ["GridCompressor"]


class GridCompressor(BaseEstimator, TransformerMixin):
    """Error-bounded lossy compressor with an estimator interface.

    Parameters mirror :class:`srnz.engine.CompressionOptions`; ``epsilon``
    with ``eb_mode="rel"`` scales by each grid's value range at transform
    time. ``registry_path`` names a model registry directory for the
    super-resolution mode.
    """

    def __init__(
        self,
        epsilon: float = 1e-3,
        eb_mode: str = "rel",
        mode: str = "interp",
        anchor_stride: int = DEFAULT_ANCHOR_STRIDE,
        quant_radius: int = DEFAULT_RADIUS,
        registry_path: str | None = None,
        domain: str = "general",
        policy: str = "degrade",
        zstd_level: int = 3,
    ):
        self.epsilon = epsilon
        self.eb_mode = eb_mode
        self.mode = mode
        self.anchor_stride = anchor_stride
        self.quant_radius = quant_radius
        self.registry_path = registry_path
        self.domain = domain
        self.policy = policy
        self.zstd_level = zstd_level

    def _options(self) -> CompressionOptions:
        registry = None
        if self.registry_path is not None:
            registry = ModelRegistry(self.registry_path)
        return CompressionOptions(
            error_bound=ErrorBoundSpec(self.eb_mode, self.epsilon),
            mode=self.mode,
            anchor_stride=self.anchor_stride,
            quant_radius=self.quant_radius,
            registry=registry,
            domain=self.domain,
            policy=self.policy,
            zstd_level=self.zstd_level,
        )

    def fit(self, X=None, y=None):
        """Validate the parameter combination; no state is learned."""
        self._options()
        self.n_features_in_ = 0 if X is None else np.asarray(X).ndim
        return self

    @staticmethod
    def _as_grid(X) -> DataGrid:
        if isinstance(X, DataGrid):
            return X
        arr = np.asarray(X)
        precision = "f32" if arr.dtype == np.float32 else "f64"
        return DataGrid(arr, precision)

    def transform(self, X) -> bytes:
        """Compress one grid (array or DataGrid) to artifact bytes."""
        if not hasattr(self, "n_features_in_"):
            self.fit(X)
        return compress(self._as_grid(X), self._options())

    def inverse_transform(self, artifact: bytes) -> np.ndarray:
        """Decompress artifact bytes back to an array at source precision."""
        if not isinstance(artifact, (bytes, bytearray)):
            raise ConfigError("inverse_transform expects artifact bytes")
        registry = None
        if self.registry_path is not None:
            registry = ModelRegistry(self.registry_path)
        return decompress(bytes(artifact), registry).to_source()
