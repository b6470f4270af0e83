"""click command group of fracwave."""

from .main import cli

__all__ = ["cli"]
