"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
simulation refusals exit 3, optimizer budget exhaustion exit 4.
"""


class MaxfieldsError(Exception):
    """Base class for all package errors."""


class ConfigError(MaxfieldsError):
    """Invalid user input: bad parameter values, malformed files, missing keys."""


class DimensionMismatchError(ConfigError):
    """Sites of inconsistent dimension in one site set."""


class SimulationRefusal(MaxfieldsError):
    """A guard refused to simulate (e.g. diverging scale link without a
    magnitude ceiling, or a window buffer too small for the reachable
    density scales)."""


class DegenerateSampleError(MaxfieldsError):
    """A statistic is undefined on the given sample (constant input)."""


class FactorizationError(MaxfieldsError):
    """Covariance factorization failed even after jitter escalation."""


class NonConvergenceError(MaxfieldsError):
    """Iterative fit ran out of iterations; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
