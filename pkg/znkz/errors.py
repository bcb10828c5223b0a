"""
Error hierarchy for the Z_N curve KZ engine

Every error carries the CLI exit code it maps to.
"""

from typing import Any, Dict, Optional


class ZnkzError(Exception):
    """Base class for all engine errors"""

    code = 3


class InputError(ZnkzError):
    """Invalid user input: bad curve, bad indices, unsupported parameters"""

    code = 2


class NumericalError(ZnkzError):
    """Numerical non-convergence or a violated numerical precondition"""

    code = 3


class CheckFailure(ZnkzError):
    """A verification ran to completion and did not pass"""

    code = 1

    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.report = report or {}


# Input errors
class DuplicateBranchPoint(InputError):
    pass


class BadCount(InputError):
    pass


class InvalidIndex(InputError):
    pass


class BadIndices(InputError):
    pass


class GenusZero(InputError):
    pass


class GenusTooSmall(InputError):
    pass


class DegenerateVandermonde(InputError):
    pass


class WrongN(InputError):
    pass


class CoincidentProjection(InputError):
    pass


class PartitionOverflow(InputError):
    pass


class StepTooLarge(InputError):
    pass


# Numerical errors
class PathTooClose(NumericalError):
    pass


class PrecisionLoss(NumericalError):
    pass


class PoleAtBranchPoint(NumericalError):
    pass


class NonConvergent(NumericalError):
    pass


class PoleHit(NumericalError):
    pass


class PoleOnPath(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NonClosedCycle(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class SingularAMatrix(NumericalError):
    pass


class NotNegativeDefinite(NumericalError):
    pass


class Underflow(NumericalError):
    pass


class SingularCharacteristic(NumericalError):
    pass


class NoCandidate(NumericalError):
    pass


class Ambiguous(NumericalError):
    pass


class DegenerateSampling(NumericalError):
    pass
