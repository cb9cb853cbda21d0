"""Exception types raised across the package."""


class SpinlabError(ValueError):
    """Base class for every domain error raised by spinlab."""


# graph construction and queries
class DuplicateEdge(SpinlabError):
    pass


class SelfLoop(SpinlabError):
    pass


class VertexOutOfRange(SpinlabError):
    pass


class InfeasibleFamily(SpinlabError):
    pass


class RootPinned(SpinlabError):
    pass


class TreeTooLarge(SpinlabError):
    pass


class EdgeNotInGraph(SpinlabError):
    pass


# model parameters
class InvalidParams(SpinlabError):
    pass


class NonPositiveTilt(SpinlabError):
    pass


class ZeroField(SpinlabError):
    pass


class InconsistentPinning(SpinlabError):
    pass


# exact enumeration
class TooLarge(SpinlabError):
    pass


class EmptySupport(SpinlabError):
    pass


class InvalidTilt(SpinlabError):
    pass


class NotAbsolutelyContinuous(SpinlabError):
    pass


class NotReversible(SpinlabError):
    pass


class Nonconvergent(SpinlabError):
    pass


class ZeroGap(SpinlabError):
    pass


# tree analysis
class NotAntiferromagnetic(SpinlabError):
    pass


class NoCriticalPoint(SpinlabError):
    pass


class NotCritical(SpinlabError):
    pass


class ThetaOutOfRange(SpinlabError):
    pass


class ZeroSlack(SpinlabError):
    pass


class NegativeArgument(SpinlabError):
    pass


class DeltaOutOfRange(SpinlabError):
    pass


class BarBetaTooLarge(SpinlabError):
    pass


# dynamics
class UpStepTooLarge(SpinlabError):
    pass


class NotFerromagnetic(SpinlabError):
    pass


# bound evaluators
class LambdaTooLarge(SpinlabError):
    pass


class HardConstraint(SpinlabError):
    pass


class RegimeViolation(SpinlabError):
    pass


class NotBipartiteRegular(SpinlabError):
    pass


class ConfigError(SpinlabError):
    pass


class InfeasibleState(SpinlabError):
    pass


class InputsOutOfRegime(SpinlabError):
    pass
