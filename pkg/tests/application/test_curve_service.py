"""
Tests for the m(lambda) and omega(lambda) curves.

The constant family on [-1, 1] gives m = -lambda^{3/2} / (3 sqrt 2) and
omega = sqrt(lambda / 2), which satisfies every structural check exactly.
"""

import math

import numpy as np
import pytest

from src.application.services import CurveService
from src.application.services.curve_service import (
    check_concavity,
    check_derivative_identity,
    check_m_zero_limit,
    check_omega_monotone,
    check_omega_sign,
    constant_energy_bound,
    cross_validate,
    omega_derivative_diagnostics,
)
from src.domain.entities import CurveSample, SweepConfig


def _constant_family(lambdas):
    return [
        CurveSample(lambda_=lam, energy_m=constant_energy_bound(lam, 0.0), omega=math.sqrt(lam / 2.0))
        for lam in lambdas
    ]


@pytest.fixture
def family():
    return _constant_family(np.linspace(0.5, 4.0, 8))


class TestStructuralChecks:
    """Test suite for the curve checks on synthetic samples."""

    def test_constant_energy_bound(self):
        assert constant_energy_bound(2.0, 0.0) == pytest.approx(-2.0 / 3.0)
        assert constant_energy_bound(2.0, 0.5) == pytest.approx(-2.0 / 3.0 + 1.0)

    def test_family_passes_every_check(self, family):
        checks = [
            check_concavity(family),
            check_omega_monotone(family),
            check_derivative_identity(family),
            check_m_zero_limit(family, 0.0),
            check_omega_sign(family, 0.0),
            omega_derivative_diagnostics(family),
        ]

        for check in checks:
            assert check.passed, check.name

    def test_convex_curve_fails_concavity(self):
        samples = [CurveSample(lambda_=lam, energy_m=lam ** 2, omega=1.0) for lam in (1.0, 2.0, 3.0, 4.0)]
        report = check_concavity(samples)

        assert not report.passed
        assert report.worst_value == pytest.approx(2.0)
        assert len(report.violations) == 2

    def test_concavity_needs_uniform_triples(self):
        samples = [CurveSample(lambda_=lam, energy_m=-lam, omega=1.0) for lam in (1.0, 2.0, 5.0)]

        assert not check_concavity(samples).passed

    def test_decreasing_omega(self):
        samples = [CurveSample(lambda_=lam, energy_m=-lam, omega=w) for lam, w in ((1.0, 2.0), (2.0, 1.0))]
        report = check_omega_monotone(samples)

        assert not report.passed
        assert report.violations == [(1.0, 2.0)]

    def test_derivative_identity_detects_wrong_omega(self, family):
        wrong = [s.model_copy(update={"omega": 2.0 * s.omega}) for s in family]

        assert not check_derivative_identity(wrong).passed

    def test_energy_above_constant_bound(self, family):
        raised = [s.model_copy(update={"energy_m": s.energy_m + 1e-6}) for s in family]
        report = check_m_zero_limit(raised, 0.0)

        assert not report.passed
        assert report.worst_value == pytest.approx(1e-6)

    def test_omega_sign_threshold(self):
        """For a > 0 omega changes sign at lambda = 2T a."""
        samples = [
            CurveSample(lambda_=0.5, energy_m=0.0, omega=-0.3),
            CurveSample(lambda_=2.0, energy_m=0.0, omega=0.4),
        ]

        assert check_omega_sign(samples, 0.5).passed
        assert not check_omega_sign(samples, 0.0).passed

    def test_unconverged_samples_are_skipped(self, family):
        samples = family + [CurveSample(lambda_=10.0, converged=False, error="diverged")]

        assert check_concavity(samples).passed

    def test_cross_validation(self, family):
        shifted = [s.model_copy(update={"energy_m": s.energy_m + 1e-6}) for s in family]

        assert cross_validate(family, family).passed
        report = cross_validate(family, shifted)
        assert not report.passed
        assert report.worst_value == pytest.approx(1e-6)

    def test_omega_derivative_bounds(self, family):
        with_spectra = [s.model_copy(update={"sigma_sq": 1.0, "chi_phi_overlap": 2.0}) for s in family]
        report = omega_derivative_diagnostics(with_spectra)
        row = report.details["rows"][0]

        assert row["bound_linear"] == pytest.approx(0.25)
        assert row["bound_squared"] == pytest.approx(0.125)


class TestCurveService:
    """Test suite for lambda sweeps."""

    def test_short_period_sweep_follows_constants(self):
        """On [-1, 1] with alpha = 1 every minimizer is constant, so m = -lambda^{3/2} / (3 sqrt 2)."""
        config = SweepConfig(lambda_min=1.0, lambda_max=3.0, count=3, alpha=1.0, n_points=32)
        service = CurveService()
        samples = service.sweep(config)

        assert [s.converged for s in samples] == [True, True, True]
        for sample in samples:
            assert sample.energy_m == pytest.approx(constant_energy_bound(sample.lambda_, 0.0), abs=1e-9)
            assert sample.n_neg_plus == 1
        assert samples[1].warm_start_jump is not None
        checks = {check.name: check for check in service.run_checks(samples, config)}
        assert checks["concavity"].passed
        assert checks["omega_monotone"].passed
