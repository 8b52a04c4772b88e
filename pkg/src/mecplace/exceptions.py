"""Exception hierarchy shared by all solvers."""


class MecPlaceError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MecPlaceError, ValueError):
    """An argument lies outside the domain of a numerical routine."""


class DegenerateCut(MecPlaceError, ArithmeticError):
    """The ellipsoid shape matrix lost positive definiteness along a cut."""


class SolverFailure(MecPlaceError, RuntimeError):
    """An iterative solver stopped without meeting its accuracy target.

    ``diagnostics`` carries whatever the solver knew when it gave up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NonConvergence(SolverFailure):
    """ADMM residuals stayed far above their thresholds at the iteration cap."""


class MissingAllocationEntry(MecPlaceError, KeyError):
    """An allocation lacks a value required by the placement."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing allocation entry"


class InfeasibleAllocation(MecPlaceError, ValueError):
    """An allocation violates a budget or bound beyond tolerance."""


class InstanceTooLarge(MecPlaceError, ValueError):
    """Exhaustive enumeration was requested for too many users."""


class InvalidSpec(MecPlaceError, ValueError):
    """A scenario specification is malformed."""


class UnknownMethod(MecPlaceError, ValueError):
    pass


class UnknownParameter(MecPlaceError, ValueError):
    pass
