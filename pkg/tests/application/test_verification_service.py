"""
Tests for the acceptance-criteria runner.

Validates:
- Closed-form and rearrangement criteria on the fast suite
- Status bookkeeping when a criterion raises
- The full fast suite end to end (slow)
"""

import numpy as np
import pytest

from src.application.services import VerificationService
from src.application.services.verification_service import SUITES, aligned_max_error
from src.domain import spectral
from src.domain.entities import CriterionResult, CriterionStatus, RealField, Suite
from src.domain.exceptions import ConvergenceError

CRITERIA = [
    "check_residuals",
    "check_multiplier_consistency",
    "check_constant_wave",
    "check_collocation_oracle",
    "check_spectral_structure",
    "check_stability_indices",
    "check_curves",
    "check_evolution_exactness",
    "check_conservation",
    "check_orbital_stability",
    "check_rearrangement",
]


def _passing(settings):
    return CriterionResult(id="", description="", measured=0.0, bound=1.0, passed=True, status=CriterionStatus.PASS)


class TestCriteria:
    """Test suite for individual criteria."""

    def test_constant_wave_closed_forms(self):
        result = VerificationService().check_constant_wave(SUITES[Suite.FAST])

        assert result.status == CriterionStatus.PASS
        assert result.details["n_neg_plus"] == 1

    def test_rearrangement_invariants(self):
        result = VerificationService(rng_seed=3).check_rearrangement(SUITES[Suite.FAST])

        assert result.details["multiset_preserved"]
        assert result.details["bell_fixed_point"]

    def test_aligned_max_error(self, unit_grid):
        bump = RealField.from_function(unit_grid, lambda x: np.exp(np.cos(np.pi * x)))

        assert aligned_max_error(spectral.translate(bump, -0.4), bump) < 1e-8


class TestRunner:
    """Test suite for report assembly."""

    def test_all_pass(self, monkeypatch):
        service = VerificationService()
        for name in CRITERIA:
            monkeypatch.setattr(service, name, _passing)
        report = service.run(Suite.FAST)

        assert [c.id for c in report.criteria] == [f"C{i}" for i in range(1, 12)]
        assert report.passed
        assert all(c.description for c in report.criteria)

    def test_exception_becomes_error_status(self, monkeypatch):
        service = VerificationService()
        for name in CRITERIA:
            monkeypatch.setattr(service, name, _passing)

        def broken(settings):
            raise ConvergenceError("oracle did not converge")

        monkeypatch.setattr(service, "check_collocation_oracle", broken)
        report = service.run(Suite.FAST)
        c4 = report.get_criterion("C4")

        assert c4.status == CriterionStatus.ERROR
        assert "oracle did not converge" in c4.error
        assert not report.passed
        assert report.has_errors
        assert report.get_criterion("C5").status == CriterionStatus.PASS

    def test_suites_scale_up(self):
        fast, full = SUITES[Suite.FAST], SUITES[Suite.FULL]

        assert full.residual_n >= fast.residual_n
        assert full.stability_t > fast.stability_t
        assert full.convergence_dts == (0.02, 0.01)


@pytest.mark.slow
class TestFastSuite:
    """End-to-end run of the fast suite."""

    def test_fast_suite_passes(self):
        report = VerificationService(rng_seed=0).run(Suite.FAST)

        failing = [(c.id, c.status.value, c.measured, c.bound, c.error) for c in report.criteria if c.status != CriterionStatus.PASS]
        assert not failing
