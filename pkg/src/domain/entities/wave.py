import uuid
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .field import RealField


class StepRule(str, Enum):
    """Line-search rule for the projected descent."""
    FIXED = "fixed"
    BACKTRACKING = "backtracking"


class SolverOptions(BaseModel):
    """Options for the constrained minimization."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    max_iters: int = Field(5000, ge=1, description="Descent iteration cap per seed")
    grad_tol: float = Field(1e-7, gt=0, description="Stop when ||G|| <= grad_tol * max(1, ||phi||)")
    step_rule: StepRule = Field(StepRule.BACKTRACKING, description="Fixed step or Armijo backtracking")
    initial_step: float = Field(1.0, gt=0, description="First trial step in the preconditioned metric")
    rearrange_every: int = Field(10, ge=0, description="Rearrangement period in iterations, 0 = off")
    newton_polish: bool = Field(True, description="Polish the best descent result with Newton")
    newton_tol: float = Field(1e-12, gt=0, description="Newton residual target (relative to 1 + ||phi||)")
    seeds: int = Field(3, ge=1, description="Number of multi-start seeds")
    rng_seed: int = Field(0, description="Base seed for the random starts")
    jobs: int = Field(1, ge=1, description="Worker threads for the multi-start")
    seed_profile: Optional[RealField] = Field(None, description="Optional warm start")


class SmoothnessReport(BaseModel):
    """Fourier decay of a profile."""

    weighted_max: Dict[int, float] = Field(default_factory=dict, description="max |f(k)| (1+|k|)^p / max |f| for each p")
    tail_level: float = Field(..., description="max relative coefficient in the band |k| >= N/3")
    resolved: bool = Field(..., description="tail_level <= threshold")
    threshold: float = Field(1e-10, description="Relative plateau threshold")


class WaveProfile(BaseModel):
    """Converged solution of Lambda^alpha phi + omega phi - phi^2 + a = 0 with ||phi||^2 = lambda."""

    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)

    profile_id: str = Field(default_factory=lambda: str(uuid.uuid4()), description="Unique profile identifier")
    phi: RealField = Field(..., description="The wave")
    omega: float = Field(..., description="Wave speed / Lagrange multiplier")
    a_param: float = Field(..., description="Integration constant a")
    lambda_: float = Field(..., alias="lambda", gt=0, description="Constraint value of the squared L^2 norm")
    alpha: float = Field(..., gt=0, le=2, description="Dispersion order")
    residual_l2: float = Field(..., ge=0, description="L^2 norm of the profile equation residual")
    omega_consistency: float = Field(0.0, ge=0, description="Relative gap between the energy and mass formulas for omega")
    omega_energy: Optional[float] = Field(None, description="omega from the energy identity")
    omega_mass: Optional[float] = Field(None, description="omega from the integrated equation")
    energy: Optional[float] = Field(None, description="E_a[phi]")
    converged: bool = Field(True, description="False when the solver stopped early")
    positive: bool = Field(True, description="phi > 0 on the grid")

    @property
    def grid(self):
        return self.phi.grid

    @property
    def half_period(self) -> float:
        return self.phi.grid.half_period

    @model_validator(mode="after")
    def _flag_positivity(self):
        self.positive = bool(self.phi.values.min() > 0)
        return self


class SolveDiagnostics(BaseModel):
    """Per-solve record: descent history, multi-start spread and Newton history."""

    iterations: int = Field(0, description="Descent iterations of the retained seed")
    energy_history: List[float] = Field(default_factory=list, description="Energy after every accepted step")
    descent_residual: float = Field(0.0, description="||G|| when descent stopped")
    descent_converged: bool = Field(False, description="Descent met grad_tol")
    seed_energies: List[Optional[float]] = Field(default_factory=list, description="Final energy per seed, None on failure")
    seed_disagreement: float = Field(0.0, description="Max energy gap between converged seeds")
    best_seed: int = Field(0, description="Index of the retained seed")
    newton_residuals: List[float] = Field(default_factory=list, description="Residual per Newton iteration")
    messages: List[str] = Field(default_factory=list, description="Diagnostics worth reporting")
