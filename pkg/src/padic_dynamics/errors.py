"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class PadicDynamicsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigMismatch(PadicDynamicsError):
    """Operands live over different ring configurations."""


class InvalidConfig(PadicDynamicsError, ValueError):
    pass


class NotAUnit(PadicDynamicsError, ArithmeticError):
    pass


class NotInvertible(PadicDynamicsError, ArithmeticError):
    """Compositional inverse requested for a series whose linear term is not a unit."""


class NonIntegralSeries(PadicDynamicsError, ValueError):
    pass


class PrecisionExhausted(PadicDynamicsError, ArithmeticError):
    pass


class RootOfUnityLinearCoefficient(PrecisionExhausted):
    """Some lambda**m - lambda vanishes to the working precision."""


class TruncationTooShallow(PadicDynamicsError, ValueError):
    pass


class HypothesisViolation(PadicDynamicsError, ValueError):
    """An input fails a hypothesis that the requested operation depends on."""


class InvalidTemplate(PadicDynamicsError, ValueError):
    pass


class NotCommuting(HypothesisViolation):
    pass


class MismatchWithTheorem(PadicDynamicsError):
    """A computed invariant disagrees with the value the theory predicts.

    ``instance`` holds a JSON-serialisable dump of everything needed to
    reproduce the failure.
    """

    def __init__(self, message: str, instance: dict | None = None):
        super().__init__(message)
        self.instance = instance or {}
