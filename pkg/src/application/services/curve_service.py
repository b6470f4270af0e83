import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.integrate

from ...domain import spectral
from ...domain.entities import CheckReport, CurveSample, ProblemKind, RealField, SweepConfig
from ...domain.exceptions import FracwaveError
from ...infrastructure.parallel import run_jobs
from .profile_service import ProfileSolver, sphere_project
from .spectral_analysis_service import SpectralAnalyzer

logger = logging.getLogger(__name__)

CONCAVITY_ABS_TOL = 1e-8
CONCAVITY_REL_TOL = 1e-6
MONOTONE_TOL = 1e-8
DERIVATIVE_REL_TOL = 0.02
INTEGRATED_REL_TOL = 0.01
UPPER_BOUND_SLACK = 1e-10
CROSS_VALIDATION_TOL = 1e-8
SPACING_RTOL = 1e-9


def _converged(samples: Sequence[CurveSample]) -> List[CurveSample]:
    return sorted((s for s in samples if s.converged and s.energy_m is not None), key=lambda s: s.lambda_)


def _uniform_triples(samples: Sequence[CurveSample]):
    """Consecutive (left, centre, right) triples with equal spacing."""
    for left, centre, right in zip(samples, samples[1:], samples[2:]):
        h_left = centre.lambda_ - left.lambda_
        h_right = right.lambda_ - centre.lambda_
        if math.isclose(h_left, h_right, rel_tol=SPACING_RTOL):
            yield left, centre, right, h_right


def constant_energy_bound(lam: float, a: float, half_period: float = 1.0) -> float:
    """Energy of the constant test function: -lambda^{3/2}/(3 sqrt(2T)) + a sqrt(2T lambda)."""
    length = 2.0 * half_period
    return -lam ** 1.5 / (3.0 * math.sqrt(length)) + a * math.sqrt(length * lam)


def check_concavity(samples: Sequence[CurveSample]) -> CheckReport:
    """Second differences m(l+h) + m(l-h) - 2m(l) must be <= 1e-8 + 1e-6 |m(l)|."""
    points = _converged(samples)
    violations: List[Tuple[float, float]] = []
    worst = -math.inf
    worst_tol = CONCAVITY_ABS_TOL
    for left, centre, right, _ in _uniform_triples(points):
        second = left.energy_m + right.energy_m - 2.0 * centre.energy_m
        tol = CONCAVITY_ABS_TOL + CONCAVITY_REL_TOL * abs(centre.energy_m)
        if second - tol > worst - worst_tol:
            worst, worst_tol = second, tol
        if second > tol:
            violations.append((centre.lambda_, second))
    if worst == -math.inf:
        return CheckReport(name="concavity", passed=False, worst_value=0.0, tolerance=worst_tol, details={"reason": "no uniform triples"})
    return CheckReport(name="concavity", passed=not violations, worst_value=worst, tolerance=worst_tol, violations=violations)


def check_omega_monotone(samples: Sequence[CurveSample], tol: float = MONOTONE_TOL) -> CheckReport:
    """omega must be non-decreasing in lambda up to `tol`."""
    points = [s for s in _converged(samples) if s.omega is not None]
    violations: List[Tuple[float, float]] = []
    worst = 0.0
    for left, right in zip(points, points[1:]):
        drop = left.omega - right.omega
        worst = max(worst, drop)
        if drop > tol:
            violations.append((left.lambda_, right.lambda_))
    return CheckReport(name="omega_monotone", passed=not violations, worst_value=worst, tolerance=tol, violations=violations)


def check_derivative_identity(
    samples: Sequence[CurveSample], rel_tol: float = DERIVATIVE_REL_TOL, integrated_tol: float = INTEGRATED_REL_TOL
) -> CheckReport:
    """Central differences of m against -omega/2, plus the integrated form m(l2) - m(l1) = -1/2 int omega."""
    points = [s for s in _converged(samples) if s.omega is not None]
    violations: List[Tuple[float, float]] = []
    worst = 0.0
    for left, centre, right, h in _uniform_triples(points):
        slope = (right.energy_m - left.energy_m) / (2.0 * h)
        target = -0.5 * centre.omega
        reference = max(abs(target), 1e-12)
        error = abs(slope - target) / reference
        # truncation of the central difference is about h^2 |m'''| / 6 = |second difference of omega| / 12
        truncation = abs(right.omega - 2.0 * centre.omega + left.omega) / 12.0 / reference
        allowed = max(rel_tol, 3.0 * truncation)
        worst = max(worst, error)
        if error > allowed:
            violations.append((centre.lambda_, error))

    details = {}
    integrated_ok = True
    if len(points) >= 2:
        lambdas = np.array([s.lambda_ for s in points])
        omegas = np.array([s.omega for s in points])
        change = points[-1].energy_m - points[0].energy_m
        predicted = -0.5 * float(scipy.integrate.trapezoid(omegas, lambdas))
        integrated_error = abs(change - predicted) / max(abs(predicted), 1e-12)
        integrated_ok = integrated_error <= integrated_tol
        details = {"integrated_error": integrated_error, "integrated_tolerance": integrated_tol}
    return CheckReport(
        name="derivative_identity",
        passed=not violations and integrated_ok and len(points) >= 3,
        worst_value=worst,
        tolerance=rel_tol,
        violations=violations,
        details=details,
    )


def check_m_zero_limit(samples: Sequence[CurveSample], a: float, half_period: float = 1.0) -> CheckReport:
    """|m| decreases towards lambda -> 0 and each m stays below the constant-test-function energy."""
    points = _converged(samples)
    violations: List[Tuple[float, float]] = []
    worst = -math.inf
    for sample in points:
        excess = sample.energy_m - constant_energy_bound(sample.lambda_, a, half_period)
        worst = max(worst, excess)
        if excess > UPPER_BOUND_SLACK:
            violations.append((sample.lambda_, excess))
    magnitudes = [abs(s.energy_m) for s in points]
    # |m| need not be monotone once a > 0 lifts the energy
    monotone = a > 0 or all(x < y for x, y in zip(magnitudes, magnitudes[1:]))
    return CheckReport(
        name="m_zero_limit",
        passed=not violations and monotone and bool(points),
        worst_value=worst if points else 0.0,
        tolerance=UPPER_BOUND_SLACK,
        violations=violations,
        details={"monotone": monotone, "magnitudes": magnitudes},
    )


def check_omega_sign(samples: Sequence[CurveSample], a: float, half_period: float = 1.0) -> CheckReport:
    """omega > 0 when a <= 0; for a > 0 the sign of omega follows lambda - 2Ta."""
    threshold = 2.0 * half_period * a
    violations: List[Tuple[float, float]] = []
    for sample in _converged(samples):
        if sample.omega is None or math.isclose(sample.lambda_, threshold, rel_tol=1e-9):
            continue
        expected_positive = a <= 0 or sample.lambda_ > threshold
        if (sample.omega > 0) != expected_positive:
            violations.append((sample.lambda_, sample.omega))
    return CheckReport(
        name="omega_sign", passed=not violations, worst_value=float(len(violations)), tolerance=0.0, violations=violations,
        details={"threshold_lambda": threshold},
    )


def cross_validate(warm: Sequence[CurveSample], cold: Sequence[CurveSample], tol: float = CROSS_VALIDATION_TOL) -> CheckReport:
    """m(lambda) agreement between two passes over the same lambda grid."""
    cold_by_lambda = {round(s.lambda_, 12): s for s in _converged(cold)}
    violations: List[Tuple[float, float]] = []
    worst = 0.0
    for sample in _converged(warm):
        other = cold_by_lambda.get(round(sample.lambda_, 12))
        if other is None:
            continue
        gap = abs(sample.energy_m - other.energy_m)
        worst = max(worst, gap)
        if gap > tol:
            violations.append((sample.lambda_, gap))
    if violations:
        logger.warning(f"Warm and cold sweeps disagree at {len(violations)} points (worst {worst:.3e})")
    return CheckReport(name="cross_validation", passed=not violations, worst_value=worst, tolerance=tol, violations=violations)


def omega_derivative_diagnostics(samples: Sequence[CurveSample]) -> CheckReport:
    """Finite-difference omega'(lambda) with both candidate lower bounds from the lowest L+ eigenpair.

    Recorded for inspection; only omega' >= 0 decides `passed`.
    """
    points = [s for s in _converged(samples) if s.omega is not None]
    rows = []
    violations: List[Tuple[float, float]] = []
    worst = math.inf
    for left, centre, right, h in _uniform_triples(points):
        derivative = (right.omega - left.omega) / (2.0 * h)
        row = {"lambda": centre.lambda_, "omega_prime": derivative, "bound_linear": None, "bound_squared": None}
        if centre.sigma_sq is not None and centre.chi_phi_overlap:
            row["bound_linear"] = centre.sigma_sq / (2.0 * centre.chi_phi_overlap)
            row["bound_squared"] = centre.sigma_sq / (2.0 * centre.chi_phi_overlap ** 2)
        rows.append(row)
        worst = min(worst, derivative)
        if derivative < -MONOTONE_TOL:
            violations.append((centre.lambda_, derivative))
    return CheckReport(
        name="omega_derivative",
        passed=not violations,
        worst_value=worst if rows else 0.0,
        tolerance=MONOTONE_TOL,
        violations=violations,
        details={"rows": rows},
    )


class CurveService:
    """lambda sweeps of m(lambda), omega(lambda) and the structural checks on them."""

    def __init__(self, jobs: int = 1):
        self.jobs = jobs
        self.analyzer = SpectralAnalyzer()
        self.logger = logging.getLogger(__name__)

    def sweep(self, config: SweepConfig, warm_start: Optional[bool] = None) -> List[CurveSample]:
        """One sample per lambda on the uniform grid, sorted by lambda."""
        warm_start = config.warm_start if warm_start is None else warm_start
        grid = spectral.make_grid(config.n_points, config.half_period)
        lambdas = [float(x) for x in np.linspace(config.lambda_min, config.lambda_max, config.count)]

        if warm_start:
            samples = []
            previous: Optional[RealField] = None
            previous_jump: Optional[float] = None
            for lam in lambdas:
                sample, phi = self._sample(config, grid, lam, previous)
                if phi is not None and previous is not None:
                    jump = float(np.max(np.abs(phi.values - previous.values)))
                    sample.warm_start_jump = jump
                    if previous_jump is not None and jump > 1e-3 and jump > 4.0 * previous_jump:
                        self.logger.warning(f"Warm-start discontinuity at lambda={lam}: jump {jump:.3e} after {previous_jump:.3e}")
                    previous_jump = jump
                previous = phi if phi is not None else previous
                samples.append(sample)
        else:
            samples = run_jobs(lambda lam: self._sample(config, grid, lam, None)[0], lambdas, self.jobs)

        failed = sum(1 for s in samples if not s.converged)
        self.logger.info(
            f"Sweep finished: {len(samples)} samples over lambda in [{config.lambda_min}, {config.lambda_max}], {failed} failed"
        )
        return samples

    def sweep_with_validation(self, config: SweepConfig) -> Tuple[List[CurveSample], Optional[CheckReport]]:
        samples = self.sweep(config)
        if not config.cross_validate:
            return samples, None
        cold = self.sweep(config, warm_start=False)
        return samples, cross_validate(samples, cold)

    def run_checks(self, samples: Sequence[CurveSample], config: SweepConfig) -> List[CheckReport]:
        return [
            check_concavity(samples),
            check_omega_monotone(samples),
            check_derivative_identity(samples),
            check_m_zero_limit(samples, config.a_param, config.half_period),
            check_omega_sign(samples, config.a_param, config.half_period),
            omega_derivative_diagnostics(samples),
        ]

    def _sample(self, config: SweepConfig, grid, lam: float, warm: Optional[RealField]) -> Tuple[CurveSample, Optional[RealField]]:
        options = config.solver.model_copy(update={"seed_profile": sphere_project(warm, lam) if warm is not None else None})
        try:
            profile, diagnostics = ProfileSolver(options).solve(lam, config.a_param, config.alpha, grid)
            report = self.analyzer.analyze(profile, ProblemKind.KDV)
        except FracwaveError as e:
            self.logger.error(f"Sweep sample lambda={lam} failed: {str(e)}")
            return CurveSample(lambda_=lam, converged=False, error=str(e)), None
        sample = CurveSample(
            lambda_=lam,
            energy_m=profile.energy,
            omega=profile.omega,
            omega_mass=profile.omega_mass,
            residual=profile.residual_l2,
            n_neg_plus=report.n_neg_plus,
            vk_index=report.vk_index,
            seed_disagreement=diagnostics.seed_disagreement,
            sigma_sq=report.sigma_sq,
            chi_phi_overlap=report.chi_phi_overlap,
            converged=profile.converged,
        )
        return sample, profile.phi
