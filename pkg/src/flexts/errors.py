"""Exception types shared across the package.

Argument and configuration problems raise plain ``ValueError``; the two
classes below mark failures that deserve distinct process exit codes in
the command line tools.
"""


class DataError(ValueError):
    """Raised when input data is malformed or insufficient for the task."""


class NumericError(RuntimeError):
    """Raised when a computation produces non-finite or degenerate output."""
