"""Exception types shared across the package.

The CLI maps these onto process exit codes: UsageError -> 1, DataError
(and its FormatError subtype) -> 2, NumericError -> 3.
"""


class HegelError(Exception):
    """Base class for errors raised by this package."""


class UsageError(HegelError):
    """Bad invocation: unknown flags, missing arguments, invalid combinations."""


class DataError(HegelError):
    """Malformed or inconsistent input data."""


class FormatError(DataError):
    """A binary or JSON artifact violates its on-disk format contract."""


class ConfigError(HegelError):
    """A configuration value is out of range or internally inconsistent."""


class NumericError(HegelError):
    """Training or inference produced non-finite values."""
