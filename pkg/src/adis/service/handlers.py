"""Service operations: pure functions from request to response models.

The FastAPI app and the CLI both dispatch through these, so local and remote
invocations run exactly the same code path.
"""
from __future__ import annotations

import numpy as np

from .. import exact, reporting
from ..adapt import AdaptConfig, GradientKind, ProjectionMode, adapt_loop
from ..errors import ConfigError, ModelFormatError
from ..experiment import config_from_dict, run_experiment
from ..model import EstimationProblem, model_from_dict, validate
from ..sampling import batch_estimate, init_params
from . import schemas


def handle_validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
    try:
        model = model_from_dict(req.model, check=False)
    except ModelFormatError as exc:
        return schemas.ValidateResponse(valid=False, violations=[str(exc)])
    violations = validate(model)
    return schemas.ValidateResponse(valid=not violations, violations=violations)


def _problem(model_obj: dict, evidence: dict[str, int],
             action: int | None) -> EstimationProblem:
    return EstimationProblem(model_from_dict(model_obj), evidence, action)


def handle_exact(req: schemas.ExactRequest) -> schemas.ExactResponse:
    problem = _problem(req.model, req.evidence, req.action)
    value = exact.true_value(problem)
    prior_var = None
    if req.variance:
        prior_var = exact.weight_variance(problem, init_params(problem, 0.0))
    return schemas.ExactResponse(value=value, prior_weight_variance=prior_var)


def handle_estimate(req: schemas.EstimateRequest) -> schemas.EstimateResponse:
    problem = _problem(req.model, req.evidence, req.action)
    theta = init_params(problem, 0.0)  # likelihood weighting samples the prior
    rng = np.random.default_rng(req.seed)
    value, _ = batch_estimate(problem, theta, req.samples, rng)
    return schemas.EstimateResponse(estimate=value, samples=req.samples, seed=req.seed)


def adapt_config_from_request(req: schemas.AdaptRequest) -> AdaptConfig:
    try:
        kind = GradientKind(req.method)
    except ValueError:
        raise ConfigError(f"unknown method '{req.method}'") from None
    try:
        projection = ProjectionMode(req.projection)
    except ValueError:
        raise ConfigError(f"unknown projection '{req.projection}'") from None
    smoothing = req.smoothing
    if smoothing is None:
        smoothing = kind in (GradientKind.LOCAL_KL2, GradientKind.LOCAL_KLS)
    return AdaptConfig(
        kind=kind,
        beta=req.beta,
        gamma=req.gamma,
        batch_size=req.batch,
        total_updates=req.updates,
        dirichlet_smoothing=smoothing,
        projection=projection,
    )


def handle_adapt(req: schemas.AdaptRequest) -> schemas.AdaptResponse:
    problem = _problem(req.model, req.evidence, req.action)
    config = adapt_config_from_request(req)
    rng = np.random.default_rng(req.seed)
    estimate, trace = adapt_loop(problem, config, rng)
    return schemas.AdaptResponse(
        estimate=estimate.value,
        seed=req.seed,
        updates=config.total_updates,
        boundary_hits=sum(s.boundary_hits for s in trace.steps),
        warnings=sum(len(s.warnings) for s in trace.steps),
        trace_csv=reporting.render_trace_csv(trace),
    )


def handle_experiment(req: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
    config, outputs = config_from_dict(req.config)
    result = run_experiment(config)
    return schemas.ExperimentResponse(
        master_seed=config.master_seed,
        true_value=result.true_value,
        mse_csv=reporting.render_mse_csv(result),
        variance_csv=reporting.render_variance_csv(result),
        outputs=outputs,
    )
