"""Exception hierarchy shared by every pipeline stage.

The CLI maps these onto process exit codes, so each class carries one.
"""


class SkewnetError(Exception):
    exit_code = 1


class ConfigError(SkewnetError, ValueError):
    """Inconsistent or invalid configuration."""

    exit_code = 2


class CapViolationError(ConfigError):
    """An augmentation plan would let synthetic rows reach the original count."""


class DataError(SkewnetError, ValueError):
    """Malformed, out-of-range, or otherwise unusable data."""

    exit_code = 3


class DimensionError(DataError):
    """Array shapes do not chain."""


class LabelError(DataError, IndexError):
    """A class index outside ``[0, n_classes)``."""


class SchemaError(DataError):
    """CSV header does not match the declared schema."""


class StateError(SkewnetError, RuntimeError):
    """Backward called without a matching cached forward pass."""

    exit_code = 3


class NumericError(SkewnetError, ArithmeticError):
    """Non-finite values reached the optimizer or a loss."""

    exit_code = 4
