from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .field import RealField
from .grid import Grid


class OperatorKind(str, Enum):
    """Linearized operators and their Hamiltonian compositions."""
    LPLUS = "Lplus"
    LMINUS = "Lminus"
    KDV_LINEARIZATION = "KdVLinearization"
    NLS_LINEARIZATION = "NLSLinearization"

    @property
    def hermitian(self) -> bool:
        return self in (OperatorKind.LPLUS, OperatorKind.LMINUS)


class ProblemKind(str, Enum):
    """Evolution problem whose stability is assessed."""
    KDV = "kdv"
    NLS = "nls"


class Verdict(str, Enum):
    """Stability verdict."""
    SPECTRALLY_STABLE = "SpectrallyStable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


class OperatorMatrix(BaseModel):
    """Dense operator in the Fourier basis (FFT slot order)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid = Field(..., description="Grid the operator acts on")
    kind: OperatorKind = Field(..., description="Which operator")
    entries: np.ndarray = Field(..., description="Dense matrix, complex")
    omega: float = Field(..., description="Wave speed used in the assembly")
    profile_ref: str = Field(..., description="Identifier of the source WaveProfile")

    @model_validator(mode="after")
    def _check_shape(self):
        n = self.grid.n_points
        size = 2 * n if self.kind == OperatorKind.NLS_LINEARIZATION else n
        if self.entries.shape != (size, size):
            raise ValueError(f"{self.kind.value} matrix must be {size}x{size}, got {self.entries.shape}")
        return self

    def hermitian_defect(self) -> float:
        scale = max(float(np.max(np.abs(self.entries))), 1e-300)
        return float(np.max(np.abs(self.entries - self.entries.conj().T)) / scale)

    def norm_estimate(self) -> float:
        return float(np.linalg.norm(self.entries, ord=np.inf))


class SturmReport(BaseModel):
    """Sign changes of ordered eigenfunctions against the 2n bound."""

    sign_changes: List[int] = Field(default_factory=list, description="Cyclic sign changes per eigenfunction")
    bounds: List[int] = Field(default_factory=list, description="Allowed count 2n per eigenfunction")
    violations: List[int] = Field(default_factory=list, description="Indices exceeding the bound")

    @property
    def passed(self) -> bool:
        return not self.violations


class SpectrumReport(BaseModel):
    """Spectral data of a wave and the resulting verdict."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    profile_ref: str = Field(..., description="Identifier of the analysed profile")
    problem: ProblemKind = Field(ProblemKind.KDV, description="Problem the dynamical spectrum belongs to")
    eigenvalues_Lplus: np.ndarray = Field(..., description="Sorted spectrum of L+")
    eigenvalues_Lminus: np.ndarray = Field(..., description="Sorted spectrum of L-")
    kernel_tol: float = Field(..., description="Absolute threshold for zero eigenvalues of L+")
    n_neg_plus: int = Field(..., description="n(L+)")
    n_neg_minus: int = Field(..., description="n(L-)")
    kernel_dim_plus: int = Field(..., description="dim Ker L+ (numerical)")
    kernel_dim_minus: int = Field(..., description="dim Ker L- (numerical)")
    kernel_vectors: List[RealField] = Field(default_factory=list, description="Numerical kernel basis of L+")
    phi_kernel_angle: float = Field(..., description="max |<phi, v>| / (||phi|| ||v||) over the kernel basis")
    vk_index: Optional[float] = Field(None, description="<L+^{-1} phi, phi>; None when ill-posed")
    coercivity_kappa: float = Field(..., description="min of L+ on span{phi, phi'}^perp")
    lowest_eigenvalue: float = Field(..., description="Lowest eigenvalue of L+ (-sigma^2)")
    chi_phi_overlap: float = Field(..., description="<chi, phi> for the lowest eigenvector chi of L+")
    lminus_phi_residual: float = Field(..., description="||L- phi|| / ||phi||")
    lplus_dphi_residual: Optional[float] = Field(None, description="||L+ phi'|| / ||phi'||, None for constants")
    dynamical_spectrum: np.ndarray = Field(..., description="Full eigenvalue set; split-off generalized-kernel modes enter as exact zeros")
    zero_cluster: np.ndarray = Field(..., description="Computed eigenvalues of the split-off generalized-kernel block")
    max_real_part: float = Field(..., description="max Re over dynamical_spectrum")
    real_part_tol: float = Field(..., description="Tolerance applied to max_real_part")
    sturm: SturmReport = Field(default_factory=SturmReport, description="Sign-change check of L+ eigenfunctions")
    verdict: Verdict = Field(Verdict.INCONCLUSIVE, description="Stability verdict")
    notes: List[str] = Field(default_factory=list, description="Evidence attached to the verdict")

    @model_validator(mode="after")
    def _check_real_part(self):
        spectrum = np.asarray(self.dynamical_spectrum)
        expected = float(np.max(spectrum.real)) if spectrum.size else 0.0
        if abs(expected - self.max_real_part) > 1e-300 + 1e-12 * abs(expected):
            raise ValueError("max_real_part must equal the max real part of dynamical_spectrum")
        return self

    @property
    def sigma_sq(self) -> float:
        return -self.lowest_eigenvalue
