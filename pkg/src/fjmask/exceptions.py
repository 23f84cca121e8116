"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: parameter problems exit with 2,
numerical failures with 3.
"""


class FJError(Exception):
    """Base class for all package errors."""


class ParameterError(FJError, ValueError):
    """An argument lies outside its valid domain."""


class NumericalError(FJError, ArithmeticError):
    """A computation could not be carried out reliably."""


class UnstableSystemError(NumericalError):
    """The system is not Schur stable, or a trajectory became non-finite."""


class InsufficientExcitationError(NumericalError):
    """The observed trajectory does not excite every mode of the system."""


class UnobservableAgentError(NumericalError):
    """The target agent ignores its neighbours (zero susceptibility)."""


class InfeasibleError(NumericalError):
    """The estimation problem has no feasible point."""
