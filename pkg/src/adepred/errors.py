"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else -> 3.
"""


class AdepredError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(AdepredError):
    """Invalid configuration: bad keys, bad values, missing files."""


class DataError(AdepredError):
    """Invalid or degenerate data: unreadable streams, single-class labels,
    schema mismatches, degenerate cohorts."""
