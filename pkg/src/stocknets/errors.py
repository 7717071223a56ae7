"""Exception hierarchy shared by all stocknets modules.

The split mirrors the CLI exit codes: bad input files raise DataError
(exit 2), mathematically undefined computations raise NumericError
(exit 3), and plain ValueError is reserved for programmer-facing
argument mistakes (bad index, negative width, ...).
"""


class StocknetsError(Exception):
    """Base class for errors raised by stocknets."""


class DataError(StocknetsError):
    """Malformed or inconsistent input data (bad CSV row, missing ticker, ...)."""


class NumericError(StocknetsError):
    """A requested statistic is undefined for the given data."""
