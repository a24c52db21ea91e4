"""HTTP service around the simulator: FastAPI app factory and schemas."""

from .app import create_app

__all__ = ["create_app"]
