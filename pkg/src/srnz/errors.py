"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: configuration and input
problems exit 2, corrupted streams or files exit 3, violated internal
invariants exit 4.
"""

__all__ = [
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


class SrnzError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


class ConfigError(SrnzError):
    """Invalid configuration or arguments supplied by the caller."""

    exit_code = 2


class IngestionError(ConfigError):
    """Input data unusable: non-finite values, size mismatch, bad dtype."""


class ModelNotFoundError(ConfigError):
    """A required model bundle is absent from the registry."""


class InvalidModelError(ConfigError):
    """A model bundle is structurally unusable (bad graph or shapes)."""


class CorruptionError(SrnzError):
    """Stored bytes fail integrity or format checks."""

    exit_code = 3


class CorruptArtifactError(CorruptionError):
    """Compressed artifact failed magic, layout, or digest validation."""


class CorruptStreamError(CorruptionError):
    """An entropy-coded section cannot be decoded."""


class CorruptModelError(CorruptionError):
    """A model bundle failed its content-hash or framing checks."""


class InternalError(SrnzError):
    """An internal invariant was violated; always a bug."""

    exit_code = 4
