"""FastAPI wiring around the service handlers.

Run with: uvicorn adis.service.app:app
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import AdisError, ConfigError, ModelFormatError, ModelValidationError
from . import handlers, schemas

_VALIDATION_ERRORS = (ModelFormatError, ModelValidationError, ConfigError)


def create_app() -> FastAPI:
    app = FastAPI(
        title="adis",
        description="Adaptive importance sampling for discrete Bayesian networks "
                    "and influence diagrams",
        version="0.1.0",
    )

    @app.exception_handler(AdisError)
    async def _adis_error(request: Request, exc: AdisError) -> JSONResponse:
        kind = "validation" if isinstance(exc, _VALIDATION_ERRORS) else "runtime"
        status = 422 if kind == "validation" else 400
        detail = schemas.ErrorDetail(kind=kind, message=str(exc))
        return JSONResponse(status_code=status, content={"detail": detail.model_dump()})

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
        return handlers.handle_validate(req)

    @app.post("/exact", response_model=schemas.ExactResponse)
    def exact(req: schemas.ExactRequest) -> schemas.ExactResponse:
        return handlers.handle_exact(req)

    @app.post("/estimate", response_model=schemas.EstimateResponse)
    def estimate(req: schemas.EstimateRequest) -> schemas.EstimateResponse:
        return handlers.handle_estimate(req)

    @app.post("/adapt", response_model=schemas.AdaptResponse)
    def adapt(req: schemas.AdaptRequest) -> schemas.AdaptResponse:
        return handlers.handle_adapt(req)

    @app.post("/experiment", response_model=schemas.ExperimentResponse)
    def experiment(req: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
        return handlers.handle_experiment(req)

    return app


app = create_app()
