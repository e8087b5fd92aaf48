"""Exception types raised across the package."""


class ZMDError(Exception):
    """Base class for all package errors."""


class NonIntegralDegree(ZMDError, ValueError):
    pass


class InfeasibleGraph(ZMDError, ValueError):
    pass


class UnrealizableDistribution(ZMDError, ValueError):
    pass


class InvalidProbability(ZMDError, ValueError):
    pass


class DimensionMismatch(ZMDError, ValueError):
    pass


class DegenerateChannel(ZMDError, ValueError):
    pass


class IndeterminateRatio(ZMDError, ArithmeticError):
    """A probability ratio has a zero denominator (nothing is ever flagged)."""


class UnreachableTarget(ZMDError, ValueError):
    pass


class UnknownPreset(ZMDError, KeyError):
    pass
