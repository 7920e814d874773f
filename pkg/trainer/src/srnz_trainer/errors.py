"""Exception taxonomy; exit codes mirror the compressor's convention."""


class TrainerError(Exception):
    exit_code = 4


class ConfigError(TrainerError):
    """Bad configuration or unusable input arguments."""

    exit_code = 2


class DataError(TrainerError):
    """The prepared slice store cannot support the requested training."""

    exit_code = 2


class BundleError(TrainerError):
    """A model bundle file is malformed or fails its integrity hash."""

    exit_code = 3


class DivergenceError(TrainerError):
    """Training produced a non-finite loss and was aborted."""

    exit_code = 4
