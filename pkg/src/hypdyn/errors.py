"""Exception types shared across the package."""

from __future__ import annotations


class HypdynError(Exception):
    """Base class for every error raised by hypdyn."""


class DomainError(HypdynError, ValueError):
    """A point lies outside the domain of its space."""


class InvalidLabel(HypdynError, ValueError):
    """A boundary label is not valid for the space."""


class NotAvailable(HypdynError):
    """No closed form is declared for the requested quantity."""


class ConfigurationError(HypdynError, ValueError):
    """A scenario or parameter set is malformed."""


class NumericalNonConvergence(HypdynError):
    """Base class for failures that are numerical rather than logical."""


class TailNotConverged(NumericalNonConvergence):
    """A truncated limit failed its halving tail certificate."""

    def __init__(self, message, value=None, half_value=None):
        super().__init__(message)
        self.value = value
        self.half_value = half_value


class MonotonicityViolated(HypdynError):
    """A trace that must be monotone was not."""

    def __init__(self, message, index=None, values=None):
        super().__init__(message)
        self.index = index
        self.values = values


class NonExpansionViolated(HypdynError):
    """A sampled pair witnesses that the map expands distances."""

    def __init__(self, message, witness=None, excess=None):
        super().__init__(message)
        self.witness = witness
        self.excess = excess


class SolverFailed(NumericalNonConvergence):
    """The preimage solver found no in-domain root within tolerance."""

    def __init__(self, message, best_residual=None, step=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.step = step


class NoRepellingCertificate(HypdynError):
    """The synthesizer was handed an anchor that is not certified repelling."""


class ClustersDiverged(NumericalNonConvergence):
    """Pulled-back families failed to cluster at some depth."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class VerificationFailure(HypdynError):
    """A checked identity or inequality did not hold."""
