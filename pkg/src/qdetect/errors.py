"""Exception hierarchy.

Every error raised by the library derives from :class:`QDetectError` so callers
(and the CLI) can map failures onto exit codes without string matching.
"""


class QDetectError(Exception):
    """Base class for all library errors."""


class ValidationError(QDetectError, ValueError):
    """Input data violates a documented invariant."""


class NonHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class PriorsInvalid(ValidationError):
    pass


class DeltaSingular(ValidationError):
    pass


class QNotCoisometry(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidPOVM(ValidationError):
    pass


class InfeasibleInput(ValidationError):
    pass


class BetaBelowMin(ValidationError):
    pass


class ConditionFails(QDetectError):
    """The SIM optimality condition does not hold for this ensemble."""


class NotUnitary(ValidationError):
    pass


class NotClosed(ValidationError):
    pass


class DuplicateElements(ValidationError):
    pass


class GeneratorGroupMissing(ValidationError):
    pass


class UnsupportedSize(ValidationError):
    pass


class SolverError(QDetectError):
    """The SDP engine could not produce an optimal point."""


class NoStrictlyFeasibleStart(SolverError):
    pass


class MaxIterations(SolverError):
    pass


class NumericalFailure(SolverError):
    pass


class RecoveryInfeasible(SolverError):
    pass
