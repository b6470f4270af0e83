"""Atomic file persistence of profiles, spectra, curves and runs."""

from .file_repository import FileRepository, to_jsonable

__all__ = ["FileRepository", "to_jsonable"]
