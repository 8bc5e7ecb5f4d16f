"""Exception types shared across the package."""


class FsmacError(Exception):
    """Base class for all package errors."""


class DomainError(FsmacError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class StructureError(FsmacError, ValueError):
    """A Markov chain is not stochastic, irreducible or aperiodic."""


class DelayOrderError(FsmacError, ValueError):
    """Delays were supplied with d1 < d2."""


class UnsupportedError(FsmacError, ValueError):
    """The operation is not defined for this input (e.g. k != 2)."""


class ValidationError(FsmacError, ValueError):
    """A channel description violates one or more invariants.

    The individual problems are available as ``violations``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ShapeError(FsmacError, ValueError):
    """Array shapes do not agree with the alphabet / state sizes."""


class CardinalityError(FsmacError, ValueError):
    """The time-sharing alphabet is larger than the bound allows."""


class GuardError(FsmacError, RuntimeError):
    """A numeric size guard was exceeded (e.g. too many joint cells)."""


class ConfigError(FsmacError, ValueError):
    """An experiment configuration could not be parsed or is inconsistent."""
