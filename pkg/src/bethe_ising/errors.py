"""Exception hierarchy."""


class BetheIsingError(Exception):
    """Base class for all errors raised by this package."""


class ZeroMean(BetheIsingError, ValueError):
    """A degree law with zero mean has no size-biased version."""


class InvalidProbability(BetheIsingError, ValueError):
    pass


class TooLarge(BetheIsingError, ValueError):
    """Exact enumeration was requested on too many spins."""


class SizeExplosion(BetheIsingError, RuntimeError):
    """A sampled branching-process tree exceeded the vertex cap."""


class SizeMismatch(BetheIsingError, ValueError):
    pass


class StepTooSmall(BetheIsingError, ValueError):
    """Monte Carlo noise dominates a finite-difference quotient."""


class NotConverged(BetheIsingError, RuntimeError):
    """Population dynamics hit ``t_max`` before the bracket collapsed.

    The partial :class:`~bethe_ising.cavity.FixedPointResult` is attached as
    ``result`` so callers can still inspect both populations.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
