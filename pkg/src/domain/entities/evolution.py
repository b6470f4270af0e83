from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from .grid import Grid


class Equation(str, Enum):
    """Evolution equation."""
    FKDV = "fKdV"
    FNLS = "fNLS"

    @classmethod
    def parse(cls, value: str) -> "Equation":
        lowered = value.lower()
        if lowered in ("kdv", "fkdv"):
            return cls.FKDV
        if lowered in ("nls", "fnls"):
            return cls.FNLS
        raise ValueError(f"unknown equation '{value}', expected kdv or nls")


class PerturbationKind(str, Enum):
    """Perturbation families for stability experiments."""
    RANDOM = "random"
    DIRECTED = "directed"


class EvolutionConfig(BaseModel):
    """Time integration settings."""

    equation: Equation = Field(..., description="fKdV or fNLS")
    alpha: float = Field(..., gt=0, le=2, description="Dispersion order")
    dt: float = Field(..., gt=0, description="Time step")
    t_final: float = Field(..., gt=0, description="Final time")
    grid: Grid = Field(..., description="Collocation grid")
    dealias: bool = Field(True, description="Apply the 2/3 rule to the nonlinearity")
    record_every: int = Field(100, ge=1, description="Record diagnostics every this many steps")

    @model_validator(mode="after")
    def _check_times(self):
        if self.t_final < self.dt:
            raise ValueError(f"t_final ({self.t_final}) must be >= dt ({self.dt})")
        return self

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


class ConservedTriple(BaseModel):
    """Conserved quantities P, H, M of a state."""

    momentum_p: float = Field(..., description="P = integral |u|^2")
    hamiltonian_h: float = Field(..., description="H = 1/2 ||Lambda^{alpha/2} u||^2 - 1/3 integral |u|^2 u or |u|^3")
    mass_m_re: float = Field(..., description="Re integral u")
    mass_m_im: float = Field(0.0, description="Im integral u (fNLS only)")

    @model_validator(mode="after")
    def _check_finite(self):
        values = (self.momentum_p, self.hamiltonian_h, self.mass_m_re, self.mass_m_im)
        if any(value != value or value in (float("inf"), float("-inf")) for value in values):
            raise ValueError("conserved quantities must be finite")
        return self

    @property
    def mass_m(self) -> complex:
        return complex(self.mass_m_re, self.mass_m_im)


class DriftSeries(BaseModel):
    """Relative drift of each conserved quantity against t = 0."""

    momentum_p: List[float] = Field(default_factory=list)
    hamiltonian_h: List[float] = Field(default_factory=list)
    mass_m: List[float] = Field(default_factory=list)

    def max_drift(self) -> dict:
        return {
            "P": max(self.momentum_p, default=0.0),
            "H": max(self.hamiltonian_h, default=0.0),
            "M": max(self.mass_m, default=0.0),
        }


class StabilityRunReport(BaseModel):
    """Record of one perturbed-wave evolution."""

    profile_ref: str = Field(..., description="Identifier of the wave")
    equation: Equation = Field(..., description="Equation integrated")
    times: List[float] = Field(default_factory=list, description="Record times")
    conserved: List[ConservedTriple] = Field(default_factory=list, description="Conserved quantities per record")
    orbital_distance: List[float] = Field(default_factory=list, description="Modulated H^{alpha/2} distance per record")
    shifts: List[float] = Field(default_factory=list, description="Optimal translation per record")
    phases: List[float] = Field(default_factory=list, description="Optimal phase per record (0 for fKdV)")
    drift: DriftSeries = Field(default_factory=DriftSeries, description="Relative drift against t = 0")
    perturbation_size: float = Field(..., ge=0, description="delta")
    verdict_ratio: Optional[float] = Field(None, description="max distance / delta; absolute distance when delta = 0")
    blow_up: bool = Field(False, description="Run terminated by blow-up")
    label: str = Field("", description="Batch key")

    @model_validator(mode="after")
    def _check_alignment(self):
        n = len(self.times)
        for name in ("conserved", "orbital_distance", "shifts", "phases"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per record time")
        if any(d < 0 for d in self.orbital_distance):
            raise ValueError("orbital distances must be non-negative")
        return self

    @property
    def max_distance(self) -> float:
        return max(self.orbital_distance, default=0.0)
