"""Exception types raised across the package."""


class CoframeError(Exception):
    """Base class for all package errors."""


class UnboundName(CoframeError, LookupError):
    """A parameter or formal symbol has no value in the environment."""


class DomainError(CoframeError, ValueError):
    """An expression was evaluated outside its real domain."""


class CoframeMismatch(CoframeError, ValueError):
    """Forms from different coframes were combined."""


class MetricUndefined(CoframeError, ValueError):
    """A metric operation touched a label the metric does not cover."""


class MissingTriple(CoframeError, ValueError):
    """The geometry carries no hyperkahler triple."""


class NotSpin7(CoframeError, ValueError):
    """A 4-form failed the Spin(7) eigenvalue test."""


class UnknownFamily(CoframeError, KeyError):
    pass


class BadParams(CoframeError, ValueError):
    pass


class BranchAmbiguity(CoframeError, RuntimeError):
    """Branch continuation could not separate neighbouring roots."""


class StepFailure(CoframeError, RuntimeError):
    pass


class DenominatorVanished(CoframeError, ZeroDivisionError):
    pass


class SingularCoefficient(CoframeError, ZeroDivisionError):
    pass


class DegenerateAllZero(CoframeError, ValueError):
    """Every polynomial coefficient vanished."""
