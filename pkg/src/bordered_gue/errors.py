"""Exception types shared across the package.

Each class carries the CLI exit code it maps to.
"""


class BorderedGUEError(Exception):
    exit_code = 1


class InvalidParameter(BorderedGUEError, ValueError):
    exit_code = 2


class UnsupportedParameter(BorderedGUEError, ValueError):
    """Parameters are valid but outside what the requested path can evaluate."""

    exit_code = 3


class DivergenceDetected(BorderedGUEError, ArithmeticError):
    exit_code = 3


class NumericalFailure(BorderedGUEError, ArithmeticError):
    exit_code = 4
