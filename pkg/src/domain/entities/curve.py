from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .wave import SolverOptions


class CurveSample(BaseModel):
    """One point of the m(lambda), omega(lambda) curves."""

    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(..., alias="lambda", gt=0, description="Constraint value")
    energy_m: Optional[float] = Field(None, description="Minimal energy m(lambda)")
    omega: Optional[float] = Field(None, description="omega from the energy identity")
    omega_mass: Optional[float] = Field(None, description="omega from the integrated equation")
    residual: Optional[float] = Field(None, description="Profile equation residual")
    n_neg_plus: Optional[int] = Field(None, description="n(L+)")
    vk_index: Optional[float] = Field(None, description="Vakhitov-Kolokolov index")
    seed_disagreement: float = Field(0.0, description="Max energy gap across multi-starts")
    sigma_sq: Optional[float] = Field(None, description="Minus the lowest eigenvalue of L+")
    chi_phi_overlap: Optional[float] = Field(None, description="<chi, phi> for the lowest eigenvector")
    warm_start_jump: Optional[float] = Field(None, description="L^inf jump from the previous profile")
    converged: bool = Field(True, description="Sample converged")
    error: Optional[str] = Field(None, description="Failure message for unconverged samples")


class SweepConfig(BaseModel):
    """Uniform lambda sweep at fixed a, alpha, T."""

    lambda_min: float = Field(..., gt=0, description="First lambda")
    lambda_max: float = Field(..., gt=0, description="Last lambda")
    count: int = Field(..., ge=3, description="Number of samples")
    a_param: float = Field(0.0, description="Integration constant a")
    alpha: float = Field(2.0, gt=0.5, le=2, description="Dispersion order")
    half_period: float = Field(1.0, gt=0, description="Half period T")
    n_points: int = Field(128, ge=8, description="Grid size")
    warm_start: bool = Field(True, description="Chain warm starts through the sweep")
    cross_validate: bool = Field(False, description="Also run an independent cold pass and compare")
    solver: SolverOptions = Field(default_factory=SolverOptions, description="Solver options per sample")

    @model_validator(mode="after")
    def _check_range(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_min must be smaller than lambda_max")
        return self


class CheckReport(BaseModel):
    """Outcome of a structural check on a curve."""

    name: str = Field(..., description="Check name")
    passed: bool = Field(..., description="All points within tolerance")
    worst_value: float = Field(..., description="Worst measured value")
    tolerance: float = Field(..., description="Tolerance applied to the worst point")
    violations: List[Tuple[float, float]] = Field(default_factory=list, description="(lambda, value) or lambda pairs failing the check")
    details: dict = Field(default_factory=dict, description="Extra measurements")
