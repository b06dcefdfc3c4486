"""
Exception hierarchy for the dyadic carpenter laboratory.

Every failure the library raises on purpose derives from CarpenterError so the
command-line layer can map it to a usage exit code in one place.
"""


class CarpenterError(Exception):
    """Base class for all library errors."""


class ConfigError(CarpenterError):
    """Invalid environment override or run configuration."""


class LevelOverflowError(CarpenterError):
    """A level would exceed the configured maximum level."""


class LevelMismatchError(CarpenterError):
    """Operands live at incompatible levels (or dimensions)."""


class IndexOutOfRangeError(CarpenterError):
    """A 1-based index falls outside its admissible range."""


class DomainError(CarpenterError):
    """An argument lies outside the mathematical domain of an operation."""


class InfeasibleTargetError(CarpenterError):
    """A prescribed diagonal cannot be the diagonal of a projection."""


class SynthesisError(CarpenterError):
    """A constructed projection failed its post-checks (a bug, not bad data)."""


class MatrixFormatError(CarpenterError):
    """A matrix, target or sample file is malformed."""


class ChainTooShortError(CarpenterError):
    """A projection chain has too few levels to report ratios."""
