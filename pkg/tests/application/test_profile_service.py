"""
Tests for the constrained energy minimization.

Validates:
- Energy functional and the two omega formulas on closed forms
- Sphere projection and the constrained gradient
- Constant waves and period rescaling
- Newton polish and the multi-start solver
"""

import math

import numpy as np
import pytest

from src.application.services.profile_service import (
    ProfileSolver,
    centre_profile,
    constant_wave,
    constrained_gradient,
    energy,
    make_profile,
    omega_from_energy,
    omega_from_mass,
    rescale_wave,
    residual,
    smoothness_check,
    sphere_project,
)
from src.domain import spectral
from src.domain.entities import RealField, SolverOptions
from src.domain.exceptions import IllPosedError, NewtonDivergenceError


def _constant(grid, value):
    return RealField.from_values(grid, np.full(grid.n_points, value))


class TestFunctional:
    """Test suite for the energy and its multipliers."""

    def test_energy_of_constant(self, unit_grid):
        """E_0[1] = -1/3 * 2 on [-1, 1]."""
        assert energy(_constant(unit_grid, 1.0), 0.0, 1.0) == pytest.approx(-2.0 / 3.0)

    def test_energy_linear_term(self, unit_grid):
        assert energy(_constant(unit_grid, 1.0), 0.5, 1.0) == pytest.approx(-2.0 / 3.0 + 1.0)

    def test_energy_kinetic_term(self, cosine):
        """E_0[cos(pi x)] = pi / 2 at alpha = 1; the cubic term integrates |cos|^3."""
        cubic = cosine.grid.spacing * np.sum(np.abs(cosine.values) ** 3) / 3.0

        assert energy(cosine, 0.0, 1.0) == pytest.approx(math.pi / 2.0 - cubic)

    def test_omega_from_energy(self, unit_grid):
        assert omega_from_energy(_constant(unit_grid, 1.0), 0.0, 2.0, 1.0) == pytest.approx(1.0)
        assert omega_from_energy(_constant(unit_grid, 2.0), 0.0, 8.0, 1.0) == pytest.approx(2.0)

    def test_omega_from_mass(self, unit_grid):
        """omega = (lambda - 2T a) / int phi."""
        assert omega_from_mass(_constant(unit_grid, 1.0), 0.5, 2.0) == pytest.approx(0.5)

    def test_omega_from_mass_needs_mean(self, cosine):
        with pytest.raises(IllPosedError, match="non-vanishing mean"):
            omega_from_mass(cosine, 0.0, 1.0)

    def test_residual(self, unit_grid):
        """phi = 1 with omega = 2 leaves the residual 1 everywhere, of norm sqrt(2)."""
        assert residual(_constant(unit_grid, 1.0), 2.0, 0.0, 1.0) == pytest.approx(math.sqrt(2.0))
        assert residual(_constant(unit_grid, 1.0), 1.0, 0.0, 1.0) == pytest.approx(0.0, abs=1e-14)


class TestSphere:
    """Test suite for the constraint geometry."""

    def test_projection_norm(self, cosine):
        projected = sphere_project(cosine, 3.0)

        assert projected.l2_norm() ** 2 == pytest.approx(3.0)

    def test_projection_of_zero(self, unit_grid):
        with pytest.raises(ValueError, match="zero or non-finite"):
            sphere_project(_constant(unit_grid, 0.0), 1.0)

    def test_gradient_vanishes_at_constant(self, unit_grid):
        gradient = constrained_gradient(_constant(unit_grid, 1.0), 0.0, 1.0, 2.0)

        np.testing.assert_allclose(gradient.values, 0.0, atol=1e-14)

    def test_gradient_is_tangent(self, unit_grid):
        phi = RealField.from_function(unit_grid, lambda x: 1.0 + 0.3 * np.cos(np.pi * x))
        gradient = constrained_gradient(phi, 0.2, 1.5, phi.l2_norm() ** 2)

        assert spectral.inner_l2(gradient, phi) == pytest.approx(0.0, abs=1e-12)


class TestClosedForms:
    """Test suite for constant waves and rescaling."""

    def test_constant_wave(self, unit_grid):
        """c = sqrt(lambda / 2T), omega = (c^2 - a) / c."""
        profile = constant_wave(2.0, 0.5, unit_grid, 1.0)

        np.testing.assert_allclose(profile.phi.values, 1.0)
        assert profile.omega == pytest.approx(0.5)
        assert profile.residual_l2 == pytest.approx(0.0, abs=1e-13)
        assert profile.omega_energy == pytest.approx(0.5)
        assert profile.omega_mass == pytest.approx(0.5)
        assert profile.omega_consistency == pytest.approx(0.0, abs=1e-12)
        assert profile.positive

    def test_rescale_wave(self, constant_profile):
        """Doubling the period at alpha = 1 halves phi and omega."""
        rescaled = rescale_wave(constant_profile, 2.0)

        assert rescaled.half_period == 2.0
        np.testing.assert_allclose(rescaled.phi.values, 0.5)
        assert rescaled.omega == pytest.approx(0.5)
        assert rescaled.lambda_ == pytest.approx(1.0)
        assert rescaled.residual_l2 == pytest.approx(0.0, abs=1e-13)

    def test_rescale_rejects_bad_period(self, constant_profile):
        with pytest.raises(ValueError, match="must be positive"):
            rescale_wave(constant_profile, -1.0)

    def test_make_profile_without_mean(self, cosine):
        profile = make_profile(cosine, 1.0, 0.0, 1.0, 1.0)

        assert profile.omega_mass is None
        assert profile.omega_consistency == 0.0


class TestSmoothness:
    """Test suite for the resolution and centring helpers."""

    def test_smooth_profile_is_resolved(self, cosine):
        report = smoothness_check(cosine)

        assert report.resolved
        assert report.tail_level < 1e-12

    def test_noise_is_under_resolved(self, unit_grid):
        rng = np.random.default_rng(2)
        report = smoothness_check(RealField.from_values(unit_grid, rng.normal(size=unit_grid.n_points)))

        assert not report.resolved

    def test_centre_profile(self):
        grid = spectral.make_grid(64, 1.0)
        shifted = RealField.from_function(grid, lambda x: np.exp(np.cos(np.pi * (x - 0.3))))
        centred = centre_profile(shifted)

        np.testing.assert_allclose(centred.values, np.exp(np.cos(np.pi * grid.nodes)), atol=1e-6)


class TestNewtonPolish:
    """Test suite for the bordered Newton iteration."""

    def test_polishes_near_constant(self, unit_grid):
        start = sphere_project(RealField.from_function(unit_grid, lambda x: 1.0 + 1e-4 * np.cos(np.pi * x)), 2.0)
        profile = make_profile(start, 1.0, 0.0, 2.0, 1.0, converged=False)
        history = []
        polished = ProfileSolver().newton_polish(profile, history=history)

        assert polished.residual_l2 < 1e-10
        np.testing.assert_allclose(polished.phi.values, 1.0, atol=1e-10)
        assert polished.omega == pytest.approx(1.0, abs=1e-10)
        assert polished.profile_id == profile.profile_id
        assert history[-1] < history[0]

    def test_rejects_start_outside_basin(self, unit_grid):
        start = sphere_project(RealField.from_function(unit_grid, lambda x: 1.0 + 0.9 * np.cos(np.pi * x)), 2.0)
        profile = make_profile(start, 1.0, 0.0, 2.0, 1.0)

        with pytest.raises(NewtonDivergenceError, match="outside the Newton basin"):
            ProfileSolver().newton_polish(profile)


class TestProfileSolver:
    """Test suite for the multi-start minimizer."""

    def test_validates_inputs(self, unit_grid):
        solver = ProfileSolver()

        with pytest.raises(ValueError, match="lambda must be positive"):
            solver.solve(0.0, 0.0, 1.0, unit_grid)
        with pytest.raises(ValueError, match="alpha must lie"):
            solver.solve(1.0, 0.0, 0.4, unit_grid)

    def test_initial_guesses_are_even_and_on_sphere(self, unit_grid):
        solver = ProfileSolver(SolverOptions(seeds=3))

        for index in range(3):
            guess = solver.initial_guess(index, 2.0, unit_grid)
            assert guess.l2_norm() ** 2 == pytest.approx(2.0)
            np.testing.assert_allclose(guess.values, guess.values[unit_grid.mirror_index()], atol=1e-14)
            assert np.all(guess.values >= 0.0)

    def test_short_period_minimizer_is_constant(self, unit_grid):
        """On [-1, 1] with lambda = 2 and alpha = 1 the minimizer is phi = 1, omega = 1."""
        profile, diagnostics = ProfileSolver(SolverOptions(seeds=2)).solve(2.0, 0.0, 1.0, unit_grid)

        np.testing.assert_allclose(profile.phi.values, 1.0, atol=1e-8)
        assert profile.omega == pytest.approx(1.0, abs=1e-8)
        assert profile.energy == pytest.approx(-2.0 / 3.0, abs=1e-10)
        assert len(diagnostics.seed_energies) >= 2
        assert np.all(np.diff(diagnostics.energy_history) <= 1e-12)

    @pytest.mark.slow
    def test_long_period_wave(self):
        """On [-8, 8] with lambda = 5 and alpha = 2 the wave is a near-soliton with omega close to (5/6)^{2/3}."""
        grid = spectral.make_grid(128, 8.0)
        profile, _ = ProfileSolver().solve(5.0, 0.0, 2.0, grid)

        assert profile.residual_l2 / (1.0 + profile.phi.l2_norm()) < 1e-10
        assert profile.omega_consistency < 1e-6
        assert profile.omega == pytest.approx((5.0 / 6.0) ** (2.0 / 3.0), rel=0.02)
        assert profile.positive
        assert spectral.is_bell_shaped(profile.phi)
        assert smoothness_check(profile.phi).resolved
