"""Exception hierarchy shared across the package."""


class AdisError(Exception):
    """Base class for all errors raised by this package."""


class ModelFormatError(AdisError):
    """A model file or payload does not conform to the JSON schema."""


class ModelValidationError(AdisError):
    """A structurally well-formed model violates a semantic invariant."""


class ConfigError(AdisError):
    """An adaptation or experiment configuration is invalid."""


class StateSpaceError(AdisError):
    """The joint state space exceeds the enumeration cap."""


class SupportError(AdisError):
    """The sampling distribution assigns zero mass where the target is positive."""


class EstimationError(AdisError):
    """A quantity is undefined for the given problem (e.g. zero total mass)."""
