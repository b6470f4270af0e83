"""Application services package."""

from .profile_service import ProfileSolver
from .spectral_analysis_service import SpectralAnalyzer
from .curve_service import CurveService
from .evolution_service import EvolutionService
from .verification_service import VerificationService

__all__ = ["ProfileSolver", "SpectralAnalyzer", "CurveService", "EvolutionService", "VerificationService"]
