"""Training configuration.

The noise tier fixes the Gaussian corruption applied to low-resolution
inputs, as a fraction of the (normalized) data range: strong = 1e-2,
weak = 1e-3, none = 0. The tier tag travels into the exported bundle so
the compressor can route error bounds to matching models.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

TIER_SIGMA = {"strong": 1e-2, "weak": 1e-3, "none": 0.0}

# learning rate halves at these fractions of the run (scaled from a
# 200K-iteration schedule with milestones at 100K/160K/180K/190K)
MILESTONE_FRACTIONS = (0.5, 0.8, 0.9, 0.95)

DEFAULT_TILE = 480
DEFAULT_CROP = 48
DEFAULT_BATCH = 32
DEFAULT_ITERATIONS = 20_000
DEFAULT_LR = 2e-4


@dataclass
class TrainConfig:
    data_dir: str
    tier: str = "weak"
    sigma: float | None = None
    tile_size: int = DEFAULT_TILE
    crop_size: int = DEFAULT_CROP
    batch_size: int = DEFAULT_BATCH
    iterations: int = DEFAULT_ITERATIONS
    learning_rate: float = DEFAULT_LR
    init_bundle: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.tier not in TIER_SIGMA:
            raise ConfigError(f"unknown noise tier {self.tier!r}; choose from {sorted(TIER_SIGMA)}")
        if self.sigma is None:
            self.sigma = TIER_SIGMA[self.tier]
        elif self.sigma != TIER_SIGMA[self.tier]:
            raise ConfigError(
                f"sigma {self.sigma!r} does not match tier {self.tier!r}"
                f" (expected {TIER_SIGMA[self.tier]!r})"
            )
        if self.crop_size < 8 or self.crop_size % 2:
            raise ConfigError(
                f"crop_size must be even and >= 8, got {self.crop_size}"
                " (the low-resolution input is the even-index subsample)"
            )
        if self.tile_size < self.crop_size:
            raise ConfigError(f"tile_size {self.tile_size} smaller than crop_size {self.crop_size}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")

    def milestones(self) -> list[int]:
        steps = sorted({max(1, int(f * self.iterations)) for f in MILESTONE_FRACTIONS})
        return [s for s in steps if s < self.iterations]
