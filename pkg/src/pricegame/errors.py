"""Exception types shared across the package."""


class PricegameError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PricegameError, ValueError):
    """Invalid configuration value or malformed scenario document."""


class DomainError(PricegameError, ValueError):
    """Numeric input outside its valid domain (e.g. a non-positive price)."""


class UnsupportedModelError(ConfigError):
    """Operation is not defined for this demand model variant."""


class FeedbackError(PricegameError, ValueError):
    """Gradient feedback handed to a learner is NaN or infinite."""


class ConvergenceError(PricegameError, RuntimeError):
    """Iterative solver failed to reach its tolerance.

    Carries the last residual, the iteration count, and whether the iterate
    was pinned at the price-domain boundary (the equilibrium may lie outside
    the configured domain in that case).
    """

    def __init__(self, message, residual=None, iterations=None, clipped=False):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.clipped = clipped


class AnchorError(PricegameError, RuntimeError):
    """Smoothed revenue curve cannot be anchored inside the price domain."""
