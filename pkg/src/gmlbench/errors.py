"""Exception hierarchy.

Two families matter to the command line: :class:`NumericalFailure` subclasses
signal that a computation ran but a numerical hypothesis broke (exit code 1);
everything else derived from :class:`WorkbenchError` is a usage or input
problem (exit code 2).
"""


class WorkbenchError(Exception):
    """Base class for all errors raised by the package."""


class NumericalFailure(WorkbenchError):
    """A well-posed computation whose numerical hypotheses failed."""


# operator core

class NotHermitian(WorkbenchError, ValueError):
    def __init__(self, deviation, field="matrix"):
        self.deviation = float(deviation)
        self.field = field
        super().__init__(f"{field} is not Hermitian (max deviation {self.deviation:.3e})")


class ConvergenceFailure(NumericalFailure):
    pass


class DegenerateGroundState(WorkbenchError, ValueError):
    pass


class DegenerateEigenvalue(WorkbenchError, ValueError):
    pass


# dynamics

class StepTooLarge(WorkbenchError, ValueError):
    pass


class PropagationGuard(WorkbenchError, ValueError):
    pass


class EndpointMismatch(WorkbenchError, ValueError):
    pass


class PictureMismatch(WorkbenchError, ValueError):
    pass


# identities

class IntervalStraddlesZero(WorkbenchError, ValueError):
    pass


class WrongInterval(WorkbenchError, ValueError):
    pass


class NonPositiveCoupling(WorkbenchError, ValueError):
    pass


# gml

class VanishingDenominator(NumericalFailure):
    pass


class BranchJump(NumericalFailure):
    pass


class NonConvergent(NumericalFailure):
    pass


class VanishingSExpectation(NumericalFailure):
    pass


class NonRealModel(WorkbenchError, ValueError):
    pass


# correlators

class EqualTimeFermions(WorkbenchError, ValueError):
    pass


# models

class TooManyModes(WorkbenchError, ValueError):
    pass


class ParseError(WorkbenchError, ValueError):
    pass


class DimensionMismatch(WorkbenchError, ValueError):
    pass
