"""HTTP service layer: pydantic schemas, handlers, FastAPI app."""
from . import handlers, schemas
from .app import app, create_app

__all__ = ["app", "create_app", "handlers", "schemas"]
