"""Domain entities package."""

from .grid import Grid, SobolevIndex
from .field import RealField, ComplexField, AnyField
from .wave import WaveProfile, SolverOptions, SolveDiagnostics, SmoothnessReport, StepRule
from .spectrum import OperatorKind, OperatorMatrix, ProblemKind, SpectrumReport, SturmReport, Verdict
from .curve import CurveSample, SweepConfig, CheckReport
from .evolution import (
    ConservedTriple,
    DriftSeries,
    Equation,
    EvolutionConfig,
    PerturbationKind,
    StabilityRunReport,
)
from .verification import CriterionResult, CriterionStatus, Suite, VerificationReport

__all__ = [
    "Grid",
    "SobolevIndex",
    "RealField",
    "ComplexField",
    "AnyField",
    "WaveProfile",
    "SolverOptions",
    "SolveDiagnostics",
    "SmoothnessReport",
    "StepRule",
    "OperatorKind",
    "OperatorMatrix",
    "ProblemKind",
    "SpectrumReport",
    "SturmReport",
    "Verdict",
    "CurveSample",
    "SweepConfig",
    "CheckReport",
    "ConservedTriple",
    "DriftSeries",
    "Equation",
    "EvolutionConfig",
    "PerturbationKind",
    "StabilityRunReport",
    "CriterionResult",
    "CriterionStatus",
    "Suite",
    "VerificationReport",
]
