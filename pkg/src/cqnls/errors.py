"""Exception hierarchy.

Domain errors (bad input, parameters outside the admissible window) map to
CLI exit code 2; convergence errors map to exit code 3.
"""


class CQNLSError(Exception):
    exit_code = 1


class DomainError(CQNLSError, ValueError):
    exit_code = 2


class ConvergenceError(CQNLSError, RuntimeError):
    exit_code = 3


class InvalidField(DomainError):
    pass


class GridTooCoarse(DomainError):
    pass


class GridMismatch(DomainError):
    pass


class NoGroundState(DomainError):
    pass


class DecayFitFailure(DomainError):
    pass


class ScaleOutOfRange(DomainError):
    pass


class NoPohozaevScale(DomainError):
    pass


class MultiplierOutOfRange(DomainError):
    pass


class DivisionByZeroField(DomainError):
    pass


class PerturbationOutOfRange(DomainError):
    pass


class CurveRangeTooNarrow(DomainError):
    pass


class StepTooLarge(DomainError):
    pass


class ShootingBracketFailure(ConvergenceError):
    pass


class ConvergenceFailure(ConvergenceError):
    pass


class EigenConvergenceFailure(ConvergenceError):
    pass


class OracleDidNotConverge(ConvergenceError):
    pass


class NumericalBlowUp(ConvergenceError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
