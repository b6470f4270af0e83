from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .grid import Grid


class _SampledField(BaseModel):
    """Sampled periodic function with its Fourier coefficients computed eagerly."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid = Field(..., description="Collocation grid")
    values: np.ndarray = Field(..., description="Samples at the grid nodes")
    coeffs: np.ndarray = Field(..., description="Fourier coefficients in FFT slot order")

    @model_validator(mode="after")
    def _check_shapes(self):
        n = self.grid.n_points
        if self.values.shape != (n,) or self.coeffs.shape != (n,):
            raise ValueError(
                f"field arrays must have length {n}, got {self.values.shape} and {self.coeffs.shape}"
            )
        return self

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


class RealField(_SampledField):
    """Real periodic field; coefficients satisfy c(-k) = conj(c(k))."""

    @field_validator("values", mode="before")
    @classmethod
    def _as_real(cls, value):
        array = np.asarray(value)
        if np.iscomplexobj(array):
            raise ValueError("RealField values must be real")
        return np.ascontiguousarray(array, dtype=float)

    @field_validator("coeffs", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return np.ascontiguousarray(np.asarray(value), dtype=complex)

    @classmethod
    def from_values(cls, grid: Grid, values) -> "RealField":
        values = np.asarray(values, dtype=float)
        return cls(grid=grid, values=values, coeffs=grid.forward(values))

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs) -> "RealField":
        return cls.from_values(grid, np.real(grid.inverse(np.asarray(coeffs))))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "RealField":
        return cls.from_values(grid, func(grid.nodes))

    def scaled(self, factor: float) -> "RealField":
        return RealField(grid=self.grid, values=factor * self.values, coeffs=factor * self.coeffs)

    def __add__(self, other: "RealField") -> "RealField":
        return RealField(grid=self.grid, values=self.values + other.values, coeffs=self.coeffs + other.coeffs)

    def __sub__(self, other: "RealField") -> "RealField":
        return RealField(grid=self.grid, values=self.values - other.values, coeffs=self.coeffs - other.coeffs)


class ComplexField(_SampledField):
    """Complex periodic field (fNLS states, complex eigenvectors)."""

    @field_validator("values", "coeffs", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return np.ascontiguousarray(np.asarray(value), dtype=complex)

    @classmethod
    def from_values(cls, grid: Grid, values) -> "ComplexField":
        values = np.asarray(values, dtype=complex)
        return cls(grid=grid, values=values, coeffs=grid.forward(values))

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs) -> "ComplexField":
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(grid=grid, values=grid.inverse(coeffs), coeffs=coeffs)

    @classmethod
    def from_real(cls, field: RealField) -> "ComplexField":
        return cls(grid=field.grid, values=field.values.astype(complex), coeffs=field.coeffs)

    def scaled(self, factor: complex) -> "ComplexField":
        return ComplexField(grid=self.grid, values=factor * self.values, coeffs=factor * self.coeffs)

    def __add__(self, other: "ComplexField") -> "ComplexField":
        return ComplexField(grid=self.grid, values=self.values + other.values, coeffs=self.coeffs + other.coeffs)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        return ComplexField(grid=self.grid, values=self.values - other.values, coeffs=self.coeffs - other.coeffs)


AnyField = Union[RealField, ComplexField]


def like(field: AnyField, values: np.ndarray) -> AnyField:
    """Build a field of the same kind as `field` from new samples."""
    if isinstance(field, RealField):
        return RealField.from_values(field.grid, np.real(values))
    return ComplexField.from_values(field.grid, values)


def like_coeffs(field: AnyField, coeffs: np.ndarray) -> AnyField:
    if isinstance(field, RealField):
        return RealField.from_coeffs(field.grid, coeffs)
    return ComplexField.from_coeffs(field.grid, coeffs)
