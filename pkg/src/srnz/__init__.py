"""Error-bounded lossy compression for 1-3D scientific floating-point grids.

The pipeline keeps a sparse anchor lattice losslessly and rebuilds the
rest by hierarchical 2x refinement, predicting each level with spline
interpolation or a learned super-resolution model, quantizing the
residuals under a strict error bound, and entropy-coding the result.
"""
from .bundle import ModelBundle, load_bundle, write_bundle
from .engine import (
    DEFAULT_ANCHOR_STRIDE,
    SR_MIN_EXTENT,
    CompressionOptions,
    compress,
    decompress,
    inspect,
    plan_levels,
    select_model_tier,
)
from .errors import (
    ConfigError,
    CorruptArtifactError,
    CorruptionError,
    CorruptModelError,
    CorruptStreamError,
    IngestionError,
    InternalError,
    InvalidModelError,
    ModelNotFoundError,
    SrnzError,
)
from .estimator import GridCompressor
from .grid import DataGrid, ErrorBoundSpec, read_raw, write_raw
from .metrics import EvalRecord, build_record, error_histogram, psnr
from .registry import ModelRegistry, default_registry

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DataGrid",
    "ErrorBoundSpec",
    "CompressionOptions",
    "compress",
    "decompress",
    "inspect",
    "plan_levels",
    "select_model_tier",
    "DEFAULT_ANCHOR_STRIDE",
    "SR_MIN_EXTENT",
    "GridCompressor",
    "ModelBundle",
    "load_bundle",
    "write_bundle",
    "ModelRegistry",
    "default_registry",
    "EvalRecord",
    "build_record",
    "error_histogram",
    "psnr",
    "read_raw",
    "write_raw",
    "SrnzError",
    "ConfigError",
    "IngestionError",
    "ModelNotFoundError",
    "InvalidModelError",
    "CorruptionError",
    "CorruptArtifactError",
    "CorruptStreamError",
    "CorruptModelError",
    "InternalError",
]
