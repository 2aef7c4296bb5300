"""Request/response models for the HTTP service.

``model`` fields carry the network/influence-diagram JSON object in the same
schema the model files use; ``evidence`` maps variable names to value indices.
"""
from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field

from ..sampling import DEFAULT_SEED


class ValidateRequest(BaseModel):
    model: dict[str, Any]


class ValidateResponse(BaseModel):
    valid: bool
    violations: list[str] = []


class ExactRequest(BaseModel):
    model: dict[str, Any]
    evidence: dict[str, int] = {}
    action: int | None = None
    variance: bool = False  # also report the prior sampler's weight variance


class ExactResponse(BaseModel):
    value: float
    prior_weight_variance: float | None = None


class EstimateRequest(BaseModel):
    model: dict[str, Any]
    evidence: dict[str, int] = {}
    action: int | None = None
    samples: int = Field(ge=1)
    seed: int = DEFAULT_SEED


class EstimateResponse(BaseModel):
    estimate: float
    samples: int
    seed: int


class AdaptRequest(BaseModel):
    model: dict[str, Any]
    evidence: dict[str, int] = {}
    action: int | None = None
    method: str = "var"
    updates: int = Field(default=100, ge=1)
    batch: int = Field(default=1, ge=1)
    beta: float | None = None
    gamma: float = 0.1
    projection: str = "mean"
    smoothing: bool | None = None  # None: on for the local KL rules that need it
    seed: int = DEFAULT_SEED


class AdaptResponse(BaseModel):
    estimate: float
    seed: int
    updates: int
    boundary_hits: int
    warnings: int
    trace_csv: str


class ExperimentRequest(BaseModel):
    config: dict[str, Any]  # experiment config with the model inlined


class ExperimentResponse(BaseModel):
    master_seed: int
    true_value: float
    mse_csv: str
    variance_csv: str
    outputs: dict[str, str]  # suggested file names from the config


class ErrorDetail(BaseModel):
    kind: str  # "validation" or "runtime"
    message: str
