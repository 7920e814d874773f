"""Training side of the srnz compressor: builds the 2x super-resolution
predictor bundles the codec consumes. Talks to the compressor only
through files (raw grids, .srnb bundles, the registry) and its CLI."""

from .bundle_io import bundle_bytes, read_bundle, write_bundle
from .config import TIER_SIGMA, TrainConfig
from .data import PairSampler, load_field, make_pair, prepare_slices, tile_slice
from .errors import (
    BundleError,
    ConfigError,
    DataError,
    DivergenceError,
    TrainerError,
)
from .model import SrNet, build_graph, load_tensors, named_tensors
from .train import TrainResult, train

__all__ = [
    "BundleError",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "PairSampler",
    "SrNet",
    "TIER_SIGMA",
    "TrainConfig",
    "TrainResult",
    "TrainerError",
    "build_graph",
    "bundle_bytes",
    "load_field",
    "load_tensors",
    "make_pair",
    "named_tensors",
    "prepare_slices",
    "read_bundle",
    "tile_slice",
    "train",
    "write_bundle",
]
