"""Exception hierarchy.

Input problems derive from ``ValueError`` as well, so callers that only care
about "bad argument" can keep catching that.
"""


class ToricError(Exception):
    """Base class for all toricmc errors."""


class EnumerationBudgetExceeded(ToricError):
    """An enumeration (Hilbert, Graver, cycles) outgrew its candidate cap."""


class NegativeResult(ToricError):
    """A well-posed question whose mathematical answer is "no"."""


class NotReversible(NegativeResult):
    pass


class InputError(ToricError, ValueError):
    pass


class DegenerateParameter(InputError):
    pass


class NonPositiveParameter(InputError):
    pass


class SampleSpaceMismatch(InputError):
    pass


class EmptySupport(InputError):
    pass


class DuplicateColumns(InputError):
    pass


class PointNotInDesign(InputError):
    pass


class InvalidTrajectory(InputError):
    pass


class ZeroWeightOnPath(InputError):
    pass


class ZeroRowSum(InputError):
    pass


class SupportAsymmetry(InputError):
    pass


class ArcMissingReverse(SupportAsymmetry):
    pass


class StationarityViolated(InputError):
    pass


class DependentCuts(InputError):
    pass


class RowSumExceedsOne(InputError):
    pass


class CombinerViolation(InputError):
    pass
