"""
Tests for the fKdV / fNLS integrator and the stability experiments.

Validates:
- Conserved quantities on closed forms
- Exact propagation of constant waves and reversibility
- Modulated orbital distances
- Perturbation library and experiment records
"""

import math

import numpy as np
import pytest

from src.application.services import EvolutionService
from src.application.services.evolution_service import (
    conserved,
    default_time_step,
    orbital_distance_kdv,
    orbital_distance_nls,
    step_fkdv,
    step_fnls,
)
from src.application.services.profile_service import constant_wave, make_profile, sphere_project
from src.domain import spectral
from src.domain.entities import ComplexField, Equation, EvolutionConfig, PerturbationKind, RealField, SobolevIndex
from src.domain.exceptions import GridMismatchError


def _config(grid, equation, dt=1e-3, t_final=0.1, record_every=10, alpha=1.0):
    return EvolutionConfig(equation=equation, alpha=alpha, dt=dt, t_final=t_final, grid=grid, record_every=record_every)


def _initial_state(grid, equation, amplitude):
    """amplitude * cos(pi x) plus a sin(2 pi x) part, imaginary for fNLS."""
    x = grid.nodes
    if equation == Equation.FKDV:
        return RealField.from_values(grid, amplitude * np.cos(np.pi * x) + 0.4 * amplitude * np.sin(2 * np.pi * x))
    return ComplexField.from_values(grid, amplitude * np.cos(np.pi * x) + 0.4j * amplitude * np.sin(2 * np.pi * x))


def _wrap_gap(value, half_period):
    """Distance of value from the nearest multiple of 2 * half_period."""
    return abs((value + half_period) % (2.0 * half_period) - half_period)


@pytest.fixture
def bump(unit_grid):
    return RealField.from_function(unit_grid, lambda x: np.exp(np.cos(np.pi * x)))


@pytest.fixture
def bump_profile(bump):
    """A non-constant profile; it need not solve the profile equation."""
    phi = sphere_project(bump, 2.0)
    return make_profile(phi, 1.0, 0.0, 2.0, 1.0)


class TestConservedQuantities:
    """Test suite for P, H and M."""

    def test_cosine(self, cosine):
        """P = 1, M = 0 and H = pi / 2 for cos(pi x) at alpha = 1."""
        triple = conserved(cosine, 1.0)

        assert triple.momentum_p == pytest.approx(1.0)
        assert triple.mass_m_re == pytest.approx(0.0, abs=1e-14)
        assert triple.hamiltonian_h == pytest.approx(math.pi / 2.0)

    def test_constant(self, unit_grid):
        triple = conserved(RealField.from_values(unit_grid, np.ones(unit_grid.n_points)), 1.5)

        assert triple.momentum_p == pytest.approx(2.0)
        assert triple.mass_m == pytest.approx(2.0)
        assert triple.hamiltonian_h == pytest.approx(-2.0 / 3.0)

    def test_complex_state(self, cosine):
        triple = conserved(ComplexField.from_real(cosine).scaled(1j), 1.0)

        assert triple.momentum_p == pytest.approx(1.0)
        assert triple.mass_m_im == pytest.approx(0.0, abs=1e-14)


class TestSteppers:
    """Test suite for single steps and full runs."""

    def test_zero_stays_zero(self, unit_grid):
        zero = RealField.from_values(unit_grid, np.zeros(unit_grid.n_points))

        assert step_fkdv(zero, 1e-3, 1.0).l2_norm() == 0.0
        assert step_fnls(ComplexField.from_real(zero), 1e-3, 1.0).l2_norm() == 0.0

    def test_constant_is_steady_under_fkdv(self, unit_grid):
        one = RealField.from_values(unit_grid, np.ones(unit_grid.n_points))
        final = EvolutionService().final_state(one, _config(unit_grid, Equation.FKDV))

        np.testing.assert_allclose(final.values, 1.0, atol=1e-13)

    def test_standing_constant_wave(self, constant_profile):
        """phi = 1 with omega = 1 evolves as e^{i t} under fNLS."""
        config = _config(constant_profile.grid, Equation.FNLS, t_final=0.5, record_every=100)
        error = EvolutionService().wave_exactness_error(constant_profile, config)

        assert error < 1e-10

    def test_exactness_needs_zero_a_for_nls(self, unit_grid):
        profile = constant_wave(2.0, 0.5, unit_grid, 1.0)

        with pytest.raises(ValueError, match="need a = 0"):
            EvolutionService().wave_exactness_error(profile, _config(unit_grid, Equation.FNLS))

    def test_record_times(self, cosine):
        records = list(EvolutionService().evolve(cosine.scaled(0.1), _config(cosine.grid, Equation.FKDV)))

        assert [t for t, _ in records] == pytest.approx([0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1])

    def test_grid_check(self, cosine):
        other = spectral.make_grid(64, 1.0)

        with pytest.raises(GridMismatchError):
            list(EvolutionService().evolve(cosine, _config(other, Equation.FKDV)))

    @pytest.mark.parametrize("equation", [Equation.FKDV, Equation.FNLS])
    def test_reversibility(self, unit_grid, equation):
        u0 = _initial_state(unit_grid, equation, 0.3)
        error = EvolutionService().reversibility_error(u0, 0.1, _config(unit_grid, equation))

        assert error < 1e-8

    @pytest.mark.parametrize("equation", [Equation.FKDV, Equation.FNLS])
    def test_conservation(self, unit_grid, equation):
        u0 = _initial_state(unit_grid, equation, 0.5)
        service = EvolutionService()
        config = _config(unit_grid, equation, t_final=0.5, record_every=100)
        start = conserved(spectral.dealias(u0), 1.0)
        end = conserved(service.final_state(u0, config), 1.0)

        assert end.momentum_p == pytest.approx(start.momentum_p, rel=1e-9)
        assert end.hamiltonian_h == pytest.approx(start.hamiltonian_h, rel=1e-7)
        if equation == Equation.FKDV:
            assert end.mass_m_re == pytest.approx(start.mass_m_re, abs=1e-12)

    def test_default_time_step(self, cosine):
        assert 0 < default_time_step(cosine, Equation.FKDV) <= 1e-3
        assert default_time_step(cosine.scaled(1e4), Equation.FNLS) == pytest.approx(0.5e-4)


class TestOrbitalDistance:
    """Test suite for the modulated distances."""

    def test_translate_has_zero_distance(self, bump):
        shifted = spectral.translate(bump, 0.3)
        distance, shift = orbital_distance_kdv(shifted, bump, 0.5)

        assert distance < 1e-9
        assert shift == pytest.approx(-0.3, abs=1e-8)

    def test_distance_of_different_fields(self, bump, cosine):
        distance, _ = orbital_distance_kdv(cosine, bump, SobolevIndex(s=0.0))

        assert distance > 0.1

    def test_nls_distance_recovers_phase(self, bump):
        rotated = ComplexField.from_real(spectral.translate(bump, 0.3)).scaled(complex(math.cos(0.7), math.sin(0.7)))
        distance, shift, theta = orbital_distance_nls(rotated, bump, 0.5)

        assert distance < 1e-9
        assert shift == pytest.approx(-0.3, abs=1e-8)
        assert theta == pytest.approx(0.7, abs=1e-8)

    @pytest.mark.parametrize("steps", [1, 5, -3])
    def test_kdv_distance_invariant_under_grid_shift(self, bump, steps):
        u = spectral.translate(bump, 0.3) + RealField.from_function(bump.grid, lambda x: 0.2 * np.sin(3 * np.pi * x))
        rolled = RealField.from_values(bump.grid, np.roll(u.values, -steps))
        distance, shift = orbital_distance_kdv(u, bump, 0.5)
        rolled_distance, rolled_shift = orbital_distance_kdv(rolled, bump, 0.5)

        assert distance > 0.01
        assert rolled_distance == pytest.approx(distance, abs=1e-12)
        assert _wrap_gap(rolled_shift + steps * bump.grid.spacing - shift, bump.grid.half_period) < 1e-9

    @pytest.mark.parametrize("steps", [1, 5, -3])
    def test_nls_distance_invariant_under_grid_shift(self, bump, steps):
        rotated = ComplexField.from_real(spectral.translate(bump, 0.3)).scaled(complex(math.cos(0.7), math.sin(0.7)))
        u = ComplexField.from_values(bump.grid, rotated.values + 0.2j * np.cos(2 * np.pi * bump.grid.nodes))
        rolled = ComplexField.from_values(bump.grid, np.roll(u.values, -steps))
        distance, shift, theta = orbital_distance_nls(u, bump, 0.5)
        rolled_distance, rolled_shift, rolled_theta = orbital_distance_nls(rolled, bump, 0.5)

        assert distance > 0.01
        assert rolled_distance == pytest.approx(distance, abs=1e-12)
        assert _wrap_gap(rolled_shift + steps * bump.grid.spacing - shift, bump.grid.half_period) < 1e-9
        assert _wrap_gap(rolled_theta - theta, math.pi) < 1e-9


class TestPerturbations:
    """Test suite for the perturbation library."""

    def test_random_perturbation(self, bump_profile):
        service = EvolutionService()
        perturbation = service.perturbation_library(bump_profile, PerturbationKind.RANDOM, seed=4)
        index = SobolevIndex(s=0.5)

        assert spectral.norm_sobolev(perturbation, index) == pytest.approx(1.0)
        assert spectral.inner_l2(perturbation, bump_profile.phi) == pytest.approx(0.0, abs=1e-12)
        assert spectral.inner_l2(perturbation, spectral.derivative(bump_profile.phi)) == pytest.approx(0.0, abs=1e-12)

    def test_random_perturbation_is_seeded(self, bump_profile):
        service = EvolutionService()
        first = service.perturbation_library(bump_profile, PerturbationKind.RANDOM, seed=4)
        again = service.perturbation_library(bump_profile, PerturbationKind.RANDOM, seed=4)
        other = service.perturbation_library(bump_profile, PerturbationKind.RANDOM, seed=5)

        np.testing.assert_array_equal(first.values, again.values)
        assert np.max(np.abs(first.values - other.values)) > 1e-6

    def test_complex_perturbation(self, bump_profile):
        perturbation = EvolutionService().perturbation_library(bump_profile, PerturbationKind.RANDOM, 1, Equation.FNLS)

        assert isinstance(perturbation, ComplexField)
        assert spectral.norm_sobolev(perturbation, 0.5) == pytest.approx(1.0)

    def test_directed_perturbation(self, constant_profile):
        """The lowest L+ eigenvector of the constant wave is the constant itself."""
        perturbation = EvolutionService().perturbation_library(constant_profile, PerturbationKind.DIRECTED, seed=0)

        assert spectral.norm_sobolev(perturbation, 0.5) == pytest.approx(1.0)
        assert np.ptp(perturbation.values) < 1e-12
        assert perturbation.values[0] > 0


class TestExperiments:
    """Test suite for stability runs."""

    def test_unperturbed_constant_wave(self, constant_profile):
        zero = RealField.from_values(constant_profile.grid, np.zeros(constant_profile.grid.n_points))
        config = _config(constant_profile.grid, Equation.FKDV, t_final=0.1, record_every=10)
        report = EvolutionService().run_experiment(constant_profile, zero, config, delta=0.0, label="zero")

        assert len(report.times) == 11
        assert report.max_distance < 1e-12
        assert report.verdict_ratio == pytest.approx(report.max_distance)
        assert not report.blow_up
        assert report.drift.max_drift()["P"] < 1e-12
        assert report.label == "zero"

    def test_perturbed_nls_run(self, constant_profile):
        service = EvolutionService()
        delta = 1e-3
        perturbation = service.perturbation_library(constant_profile, PerturbationKind.RANDOM, 2, Equation.FNLS).scaled(delta)
        config = _config(constant_profile.grid, Equation.FNLS, t_final=0.2, record_every=20)
        report = service.run_experiment(constant_profile, perturbation, config)

        assert report.perturbation_size == pytest.approx(delta)
        assert report.orbital_distance[0] <= delta * (1 + 1e-9)
        assert report.verdict_ratio < 10.0
        assert max(report.drift.momentum_p) < 1e-9
        assert all(0.0 <= phase < 2 * math.pi for phase in report.phases)
