"""Exception types shared across the package."""


class SelfdualError(Exception):
    """Base class for all package errors."""


class DimensionError(SelfdualError, ValueError):
    """Operands live in incompatible vector spaces."""


class InvalidArgument(SelfdualError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedOperation(SelfdualError, NotImplementedError):
    """The requested evaluation has no closed form and no attached grid."""


class OracleConvergenceError(SelfdualError, RuntimeError):
    """Inner fixed-point iteration of a time stepper did not converge."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ConfigError(SelfdualError, ValueError):
    """A run configuration failed validation."""

    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class DomainWarning(UserWarning):
    """An extended-real convention was applied outside the effective domain."""
