"""
Tests for the linearized operators and the stability verdict.

The constant wave phi = 1 on [-1, 1] (alpha = 1, lambda = 2, a = 0, omega = 1)
has L+ = Lambda - 1 and L- = Lambda, so every spectral quantity has a closed form.
"""

import math

import numpy as np
import pytest

from src.application.services import SpectralAnalyzer
from src.application.services.profile_service import ProfileSolver, constant_wave
from src.application.services.spectral_analysis_service import (
    count_negative,
    count_sign_changes,
    hamiltonian_symmetry_defect,
    kernel_tolerance,
    split_symmetry_block,
)
from src.domain import spectral
from src.domain.entities import OperatorKind, ProblemKind, Verdict
from src.domain.exceptions import EigenSolverError


def _nearest(values, target):
    return float(np.min(np.abs(np.asarray(values) - target)))


class TestHelpers:
    """Test suite for eigenvalue bookkeeping."""

    def test_count_negative(self):
        assert count_negative(np.array([-2.0, -1e-12, 0.0, 0.5]), 1e-10) == (1, 2)

    def test_kernel_tolerance_floor(self):
        assert kernel_tolerance(np.array([1e-3])) == pytest.approx(1e-10)
        assert kernel_tolerance(np.array([-1.0, 100.0])) == pytest.approx(1e-5)

    def test_sign_changes_of_cosine(self, cosine):
        assert count_sign_changes(cosine.values) == 2
        assert count_sign_changes(np.ones(8)) == 0

    def test_symmetry_defect(self):
        quartet = np.array([1 + 2j, 1 - 2j, -1 + 2j, -1 - 2j])

        assert hamiltonian_symmetry_defect(quartet) == pytest.approx(0.0)
        assert hamiltonian_symmetry_defect(np.array([1.0 + 0j, 2.0 + 0j])) > 0.5

    def test_jordan_chain_split_off(self):
        """Only the chain's span leaves; a small genuine eigenvalue stays in the rest."""
        matrix = np.diag([0.0, 0.0, 1e-5, 2j, -2j])
        matrix[0, 1] = 1.0
        eye = np.eye(5)
        rest, block = split_symmetry_block(matrix, [[eye[0], eye[1]]], 1e-10)

        assert block.size == 2
        assert np.max(np.abs(block)) < 1e-12
        assert rest.size == 3
        assert _nearest(rest, 1e-5) < 1e-14
        assert _nearest(rest, 2j) < 1e-14

    def test_non_nilpotent_chain_rejected(self):
        """An invariant span carrying real eigenvalues +-1e-2 is not a generalized kernel."""
        matrix = np.array([[0.0, 1.0], [1e-4, 0.0]])
        rest, block = split_symmetry_block(matrix, [[np.array([1.0, 0.0]), np.array([0.0, 1.0])]], 1e-10)

        assert block.size == 0
        assert np.max(rest.real) == pytest.approx(1e-2)

    def test_negligible_chain_vectors_dropped(self):
        matrix = np.diag([1.0 + 0j, -1.0 + 0j])
        rest, block = split_symmetry_block(matrix, [[np.array([1e-14, 0.0])]], 1e-10)

        assert block.size == 0
        assert sorted(rest.real) == pytest.approx([-1.0, 1.0])


class TestAssembly:
    """Test suite for operator assembly."""

    def test_operator_kinds(self, constant_profile):
        analyzer = SpectralAnalyzer()
        lplus = analyzer.assemble_lplus(constant_profile)
        lminus = analyzer.assemble_lminus(constant_profile)

        assert lplus.kind == OperatorKind.LPLUS
        assert lplus.hermitian_defect() < 1e-14
        np.testing.assert_allclose(np.diag(lplus.entries).real, spectral.symbol(lplus.grid, 1.0) - 1.0, atol=1e-13)
        np.testing.assert_allclose(np.diag(lminus.entries).real, spectral.symbol(lminus.grid, 1.0), atol=1e-13)

    def test_rejects_non_hermitian_kind(self, constant_profile):
        analyzer = SpectralAnalyzer()

        with pytest.raises(ValueError, match="builds L\\+ or L-"):
            analyzer.assemble_operator(constant_profile.phi, 1.0, 1.0, OperatorKind.KDV_LINEARIZATION)

    def test_sym_spectrum_needs_hermitian(self, constant_profile):
        analyzer = SpectralAnalyzer()
        linearization = analyzer.assemble_kdv_linearization(analyzer.assemble_lplus(constant_profile))

        with pytest.raises(EigenSolverError, match="Hermitian"):
            analyzer.sym_spectrum(linearization)

    def test_nls_block_shape(self, constant_profile):
        analyzer = SpectralAnalyzer()
        lplus = analyzer.assemble_lplus(constant_profile)
        block = analyzer.assemble_nls_linearization(lplus, analyzer.assemble_lminus(constant_profile))

        assert block.entries.shape == (64, 64)


class TestConstantWaveSpectrum:
    """Test suite for the closed-form spectra of the constant wave."""

    def test_hermitian_spectra(self, constant_profile):
        analyzer = SpectralAnalyzer()
        eig_plus, vectors = analyzer.sym_spectrum(analyzer.assemble_lplus(constant_profile))
        eig_minus, _ = analyzer.sym_spectrum(analyzer.assemble_lminus(constant_profile))
        symbol = np.sort(spectral.symbol(constant_profile.grid, 1.0))

        np.testing.assert_allclose(eig_plus, symbol - 1.0, atol=1e-12)
        np.testing.assert_allclose(eig_minus, symbol, atol=1e-12)
        assert vectors[0].l2_norm() == pytest.approx(1.0)

    def test_report(self, constant_profile):
        report = SpectralAnalyzer().analyze(constant_profile, ProblemKind.KDV)

        assert report.lowest_eigenvalue == pytest.approx(-1.0, abs=1e-12)
        assert report.sigma_sq == pytest.approx(1.0, abs=1e-12)
        assert report.n_neg_plus == 1
        assert report.kernel_dim_plus == 0
        assert report.n_neg_minus == 0
        assert report.kernel_dim_minus == 1
        assert report.vk_index == pytest.approx(-2.0, abs=1e-12)
        assert report.coercivity_kappa == pytest.approx(math.pi - 1.0, abs=1e-12)
        assert report.chi_phi_overlap == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert report.lminus_phi_residual == pytest.approx(0.0, abs=1e-12)
        assert report.lplus_dphi_residual is None
        assert report.sturm.passed

    def test_kdv_dynamical_spectrum(self, constant_profile):
        """d/dx L+ acts on e^{i pi k x} as i pi k (pi |k| - 1)."""
        spectrum = SpectralAnalyzer().kdv_dynamical_spectrum(constant_profile)

        for k in range(-5, 6):
            assert _nearest(spectrum, 1j * math.pi * k * (math.pi * abs(k) - 1.0)) < 1e-10
        assert np.max(np.abs(spectrum.real)) < 1e-10

    def test_nls_dynamical_spectrum(self, constant_profile):
        """J diag(L+, L-) has eigenvalues +- i sqrt((pi k - 1) pi k) for k >= 1."""
        spectrum = SpectralAnalyzer().nls_dynamical_spectrum(constant_profile)

        for k in range(1, 6):
            root = math.sqrt((math.pi * k - 1.0) * math.pi * k)
            assert _nearest(spectrum, 1j * root) < 1e-10
            assert _nearest(spectrum, -1j * root) < 1e-10

    def test_kdv_verdict(self, constant_profile):
        report = SpectralAnalyzer().analyze(constant_profile, ProblemKind.KDV)

        assert report.verdict == Verdict.SPECTRALLY_STABLE
        assert report.real_part_tol == 1e-7
        assert report.max_real_part <= report.real_part_tol
        assert report.max_real_part == pytest.approx(float(np.max(report.dynamical_spectrum.real)))

    def test_small_positive_real_part_blocks_stable_verdict(self, constant_profile):
        analyzer = SpectralAnalyzer()
        report = analyzer.analyze(constant_profile, ProblemKind.KDV)
        spectrum = np.append(report.dynamical_spectrum, 1e-5 + 0j)
        perturbed = report.model_copy(update={"dynamical_spectrum": spectrum, "max_real_part": float(np.max(spectrum.real))})
        verdict, notes = analyzer.stability_verdict(perturbed, ProblemKind.KDV)

        assert perturbed.max_real_part == pytest.approx(1e-5)
        assert verdict in (Verdict.UNSTABLE, Verdict.INCONCLUSIVE)
        assert any("exceeds" in note for note in notes)

    def test_nls_phase_chain_reported_as_exact_zeros(self, constant_profile):
        """The (0, phi), (L+^{-1} phi, 0) pair is split off; it enters the spectrum as exact zeros."""
        report = SpectralAnalyzer().analyze(constant_profile, ProblemKind.NLS)

        assert report.zero_cluster.size == 2
        assert np.max(np.abs(report.zero_cluster)) < 1e-6
        assert np.count_nonzero(report.dynamical_spectrum == 0) == 2
        assert report.dynamical_spectrum.size == 2 * constant_profile.grid.n_points
        assert report.max_real_part <= 1e-12
        assert report.verdict == Verdict.SPECTRALLY_STABLE

    def test_nls_verdict_requires_zero_a(self, unit_grid):
        profile = constant_wave(2.0, 0.5, unit_grid, 1.0)
        report = SpectralAnalyzer().analyze(profile, ProblemKind.NLS)

        assert report.verdict != Verdict.SPECTRALLY_STABLE
        assert any("a = 0" in note for note in report.notes)

    def test_unstable_constant(self):
        """A constant with c > pi^alpha has n(L+) > 1 and is not declared stable."""
        grid = spectral.make_grid(32, 1.0)
        profile = constant_wave(32.0, 0.0, grid, 1.0)
        report = SpectralAnalyzer().analyze(profile, ProblemKind.KDV)

        assert report.n_neg_plus > 1
        assert report.verdict != Verdict.SPECTRALLY_STABLE


@pytest.mark.slow
class TestSolitaryWaveSpectrum:
    """Test suite for a non-constant wave on [-8, 8]."""

    @pytest.fixture(scope="class")
    def report(self):
        grid = spectral.make_grid(128, 8.0)
        profile, _ = ProfileSolver().solve(5.0, 0.0, 2.0, grid)
        return SpectralAnalyzer().analyze(profile, ProblemKind.KDV)

    def test_indices(self, report):
        assert report.n_neg_plus == 1
        assert report.kernel_dim_plus == 1
        assert report.phi_kernel_angle < 1e-8
        assert report.vk_index < 0

    def test_translation_mode(self, report):
        assert report.lplus_dphi_residual < 1e-7

    def test_verdict(self, report):
        assert report.verdict == Verdict.SPECTRALLY_STABLE
        assert hamiltonian_symmetry_defect(report.dynamical_spectrum) < 1e-6
