import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Grid(BaseModel):
    """Uniform periodic collocation grid on [-T, T]."""

    model_config = ConfigDict(frozen=True)

    n_points: int = Field(..., description="Collocation count N (even, >= 8)")
    half_period: float = Field(..., description="Half period T; the domain is [-T, T]")

    @field_validator("n_points")
    @classmethod
    def _check_n_points(cls, value: int) -> int:
        if value < 8:
            raise ValueError(f"n_points must be >= 8, got {value}")
        if value % 2 != 0:
            raise ValueError(f"n_points must be even, got {value}")
        return value

    @field_validator("half_period")
    @classmethod
    def _check_half_period(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"half_period must be positive, got {value}")
        return value

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_period / self.n_points

    @property
    def length(self) -> float:
        return 2.0 * self.half_period

    @property
    def nodes(self) -> np.ndarray:
        """x_j = -T + 2Tj/N; node N/2 is x = 0."""
        return -self.half_period + self.spacing * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT slot order, Nyquist slot carries +N/2."""
        k = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).round().astype(int)
        k[self.n_points // 2] = self.n_points // 2
        return k

    @property
    def nyquist_slot(self) -> int:
        return self.n_points // 2

    @property
    def frequencies(self) -> np.ndarray:
        """Physical frequencies pi*k/T per slot."""
        return np.pi * self.wavenumbers / self.half_period

    def _parity(self) -> np.ndarray:
        # e^{i pi k x_0 / T} with x_0 = -T
        return np.where(self.wavenumbers % 2 == 0, 1.0, -1.0)

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Coefficients f(k) = (1/sqrt(2T)) * integral f e^{-i pi k x / T} by the rectangle rule."""
        values = np.asarray(values)
        if values.shape != (self.n_points,):
            raise ValueError(f"expected {self.n_points} samples, got shape {values.shape}")
        scale = math.sqrt(self.length) / self.n_points
        return scale * self._parity() * np.fft.fft(values)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (self.n_points,):
            raise ValueError(f"expected {self.n_points} coefficients, got shape {coeffs.shape}")
        scale = self.n_points / math.sqrt(self.length)
        return scale * np.fft.ifft(self._parity() * coeffs)

    def mirror_index(self) -> np.ndarray:
        """Index of -x_j for every node (x_0 = -T is identified with T)."""
        return (-np.arange(self.n_points)) % self.n_points


class SobolevIndex(BaseModel):
    """Order s of the H^s norm with weights (1 + |k|^2)^s."""

    model_config = ConfigDict(frozen=True)

    s: float = Field(..., description="Sobolev order (alpha/2 for the energy space)")

    @field_validator("s")
    @classmethod
    def _check_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("Sobolev order must be finite")
        return value

    def weights(self, grid: Grid) -> np.ndarray:
        k = grid.wavenumbers.astype(float)
        return (1.0 + k ** 2) ** self.s
