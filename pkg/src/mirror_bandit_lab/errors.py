"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
numeric failures exit 2, and I/O errors (plain ``OSError``) exit 3.
"""


class ConfigError(ValueError):
    """Invalid experiment configuration or infeasible parameter choice."""


class NumericError(RuntimeError):
    """A numeric routine failed to converge or produced an invalid state."""
