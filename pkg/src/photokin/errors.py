"""Exception hierarchy.

Physics errors map to CLI exit code 3, scenario errors to exit code 2.
"""


class PhotokinError(Exception):
    """Base class for all package errors."""


class PhysicsError(PhotokinError):
    """A physics-domain precondition was violated."""


class NonUnitVector(PhysicsError):
    pass


class DeltaEvaluatedPointwise(PhysicsError):
    pass


class ChannelCountMismatch(PhysicsError):
    pass


class ConvergenceFailure(PhysicsError):
    pass


class GridTooCoarse(PhysicsError):
    pass


class IncompatibleStates(PhysicsError):
    pass


class DegenerateTransition(PhysicsError):
    pass


class RootBracketingFailure(PhysicsError):
    pass


class OutOfZone(PhysicsError):
    pass


class EnergyOutsideBand(PhysicsError):
    pass


class EdgeSingular(PhysicsError):
    pass


class DegenerateBandsAtK(PhysicsError):
    pass


class StateSpansMultipleCells(PhysicsError):
    pass


class EnergyOrdering(PhysicsError):
    """The initial/final energies do not allow the requested process."""


class NonDecayingPair(EnergyOrdering):
    pass


class ZeroCurrent(PhysicsError):
    pass


class EmptyIntermediateSet(PhysicsError):
    pass


class OffShellKinematics(PhysicsError):
    pass


class DegenerateKinematics(PhysicsError):
    pass


class GridMismatch(PhysicsError):
    pass


class BroadLineWarning(UserWarning):
    pass


class RelativisticRegimeWarning(UserWarning):
    pass


class IoError(PhotokinError):
    pass
