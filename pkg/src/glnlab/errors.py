"""Exception hierarchy shared by every module.

Each class maps to one command-line exit code, see ``exit_code_for``.
"""


class GLNLabError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ParameterError(GLNLabError, ValueError):
    """Input outside the documented domain or failing validation."""


class SchemaError(ParameterError):
    """Malformed JSON or configuration input."""


class PoleError(ParameterError):
    """Evaluation too close to a pole of a gamma factor."""


class ClassError(ParameterError):
    """Parameter does not belong to the class a function requires."""


class SingularMatrixError(ParameterError):
    """Matrix is singular or too badly conditioned to factor reliably."""


class DepthError(ParameterError):
    """Requested rank exceeds what the recursion supports."""


class NonConvergenceError(GLNLabError, ArithmeticError):
    """Quadrature or iteration failed to reach the requested tolerance."""

    exit_code = 2


class BudgetError(GLNLabError, RuntimeError):
    """Work estimate exceeds the configured budget."""

    exit_code = 3


def exit_code_for(exc):
    if isinstance(exc, GLNLabError):
        return exc.exit_code
    return 1
