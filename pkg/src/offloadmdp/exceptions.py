"""Exception types shared across the package."""


class OffloadError(Exception):
    """Base class for all domain errors."""


class FeasibilityError(OffloadError):
    """An action violates a capacity, remaining-size, or single-network constraint."""


class ConfigurationError(OffloadError):
    """A scenario or model configuration is internally inconsistent."""


class SizingError(OffloadError):
    """A state space or search tree exceeds the configured budget."""


class PolicyLookupError(OffloadError, LookupError):
    """A (epoch, state) query falls outside a policy or value table's domain."""


class InternalConsistencyError(OffloadError):
    """A table was built inconsistently (missing next-stage entry, bad dims)."""
