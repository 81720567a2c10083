"""Exception hierarchy with stable, machine-readable error codes."""


class QbfError(Exception):
    """Base class for all coded errors raised by this package."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ConfigError(QbfError):
    """A parameter violates its contract (CLI exit code 2)."""


class DataError(QbfError):
    """The data cannot support the requested computation (CLI exit code 3)."""


class DegeneracyError(QbfError):
    """A numerically degenerate configuration was encountered (CLI exit code 4)."""
