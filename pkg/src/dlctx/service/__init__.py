"""FastAPI wrapper around the analysis pipeline."""

from .app import app

__all__ = ["app"]
