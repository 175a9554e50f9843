"""Exception hierarchy shared across the package.

Everything raised on bad data derives from PrnuError so the CLI can map it
to a single "data error" exit code.
"""


class PrnuError(Exception):
    """Base class for all errors raised by prnu_scout on bad input data."""


class DecodeError(PrnuError):
    """An image file could not be decoded (bad format, bad maxval, unreadable)."""


class DimensionMismatchError(PrnuError):
    """Two arrays or frames that must share a shape do not."""


class FingerprintFormatError(PrnuError):
    """A fingerprint file is corrupt: bad magic, truncated, or inconsistent sizes."""


class EmptyInputError(PrnuError):
    """An operation requiring at least one element received none."""


class DegenerateInputError(PrnuError):
    """Statistically undefined input: zero variance or an all-zero correlation surface."""


class ConfigError(PrnuError):
    """An experiment config file could not be parsed or is inconsistent."""
