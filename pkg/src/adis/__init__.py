"""Adaptive importance sampling for discrete Bayesian networks and influence diagrams.

Estimates evidence probabilities P(O=o) and action values V_o(a) by forward
importance sampling, and adapts the sampling distribution online with
stochastic-gradient update rules, validated against an exact enumeration
oracle on small models.
"""
from . import adapt, exact, experiment, fixtures, model, reporting, sampling
from .adapt import AdaptConfig, GradientKind, ProjectionMode, adapt_loop
from .errors import (
    AdisError,
    ConfigError,
    EstimationError,
    ModelFormatError,
    ModelValidationError,
    StateSpaceError,
    SupportError,
)
from .model import (
    Cpt,
    Decision,
    EstimationProblem,
    InfluenceDiagram,
    Network,
    Utility,
    Variable,
    load,
    render,
    validate,
)
from .sampling import DEFAULT_SEED, SamplerParams, init_params

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "AdisError",
    "ConfigError",
    "Cpt",
    "DEFAULT_SEED",
    "Decision",
    "EstimationError",
    "EstimationProblem",
    "GradientKind",
    "InfluenceDiagram",
    "ModelFormatError",
    "ModelValidationError",
    "Network",
    "ProjectionMode",
    "SamplerParams",
    "StateSpaceError",
    "SupportError",
    "Utility",
    "Variable",
    "adapt",
    "adapt_loop",
    "exact",
    "experiment",
    "fixtures",
    "init_params",
    "load",
    "model",
    "render",
    "reporting",
    "sampling",
    "validate",
]
