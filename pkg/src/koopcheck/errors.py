"""Exception types shared across the package."""

from __future__ import annotations


class KoopcheckError(Exception):
    """Base class for all package-specific errors."""


class UnknownSystemError(KoopcheckError):
    """Requested vector field is not registered."""


class DimensionError(KoopcheckError):
    """State or control vector has the wrong length."""


class FiniteEscapeError(KoopcheckError):
    """Trajectory norm exceeded the escape bound before reaching the target time.

    Carries the time reached and the last accepted state so callers can turn
    the event into a report instead of crashing.
    """

    def __init__(self, t_reached: float, state, bound: float):
        self.t_reached = float(t_reached)
        self.state = state
        self.bound = float(bound)
        super().__init__(f"state norm exceeded {bound:g} at t={t_reached:.6g}")


class IntegrationError(KoopcheckError):
    """Adaptive stepper failed (step size underflow or iteration cap)."""


class DictionaryError(KoopcheckError):
    """Invalid dictionary construction or evaluation request."""


class DictionaryMismatchError(KoopcheckError):
    """Eigenpair evaluated against a dictionary it was not fitted with."""


class RankDeficientError(KoopcheckError):
    """Normal equations are rank deficient and no ridge was requested."""


class FitError(KoopcheckError):
    """Regression inputs are unusable (empty, inconsistent, unexcited)."""


class DefectiveMatrixError(KoopcheckError):
    """Eigenvector basis is numerically defective."""


class ConfigError(KoopcheckError):
    """Experiment configuration failed schema validation."""
