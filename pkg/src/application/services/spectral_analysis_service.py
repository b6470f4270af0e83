import functools
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from ...domain import spectral
from ...domain.entities import (
    Grid,
    OperatorKind,
    OperatorMatrix,
    ProblemKind,
    RealField,
    SpectrumReport,
    SturmReport,
    Verdict,
    WaveProfile,
)
from ...domain.exceptions import EigenSolverError, IllPosedError

logger = logging.getLogger(__name__)

KERNEL_RELATIVE_TOL = 1e-7
KERNEL_ABSOLUTE_FLOOR = 1e-10
WEAK_NONDEGENERACY_TOL = 1e-8
LMINUS_KERNEL_TOL = 1e-8
HERMITIAN_TOL = 1e-12
STURM_COUNT = 11
STURM_ZERO_LEVEL = 1e-8
REAL_PART_TOL = 1e-7
INVARIANCE_TOL = 1e-8
SYMMETRY_FLOOR = 1e-10

Spectrum = Tuple[np.ndarray, List[RealField]]


@functools.lru_cache(maxsize=8)
def _transform_matrix(grid: Grid) -> np.ndarray:
    return spectral.coefficient_transform_matrix(grid)


def _physical_matrix(entries: np.ndarray, grid: Grid) -> np.ndarray:
    """Real-space representation U^{-1} A U of a Fourier-basis operator that maps real fields to real fields."""
    u = _transform_matrix(grid)
    physical = np.real(u.conj().T @ entries @ u) / grid.spacing
    return 0.5 * (physical + physical.T)


def kernel_tolerance(eigenvalues: np.ndarray) -> float:
    scale = float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 0.0
    return max(KERNEL_RELATIVE_TOL * scale, KERNEL_ABSOLUTE_FLOOR)


def count_negative(eigenvalues: np.ndarray, kernel_tol: float) -> Tuple[int, int]:
    """(#{mu < -tol}, #{|mu| <= tol})."""
    eigenvalues = np.asarray(eigenvalues)
    return int(np.sum(eigenvalues < -kernel_tol)), int(np.sum(np.abs(eigenvalues) <= kernel_tol))


def hamiltonian_symmetry_defect(spectrum: np.ndarray) -> float:
    """Largest distance from {conj, -lambda, -conj} of an eigenvalue to the computed set, relative to max(1, |lambda|)."""
    spectrum = np.asarray(spectrum, dtype=complex)
    if spectrum.size == 0:
        return 0.0
    worst = 0.0
    for image in (np.conj(spectrum), -spectrum, -np.conj(spectrum)):
        distance = np.min(np.abs(image[:, None] - spectrum[None, :]), axis=1)
        worst = max(worst, float(np.max(distance / np.maximum(1.0, np.abs(spectrum)))))
    return worst


def deflated_inverse(rhs: RealField, eigenvalues: np.ndarray, vectors: Sequence[RealField]) -> RealField:
    """L^{-1} rhs on the orthogonal complement of the numerical kernel, from an eigendecomposition of L."""
    tol = kernel_tolerance(eigenvalues)
    values = np.zeros(rhs.grid.n_points)
    for mu, v in zip(eigenvalues, vectors):
        if abs(mu) > tol:
            values = values + (spectral.inner_l2(rhs, v) / mu) * v.values
    return RealField.from_values(rhs.grid, values)


def _orthonormal_columns(columns: Sequence[np.ndarray], size: int) -> np.ndarray:
    if not columns:
        return np.zeros((size, 0))
    return scipy.linalg.orth(np.column_stack(columns), rcond=1e-8)


def _nilpotent_invariant(matrix: np.ndarray, basis: np.ndarray, scale: float) -> bool:
    """True when span(basis) is invariant under matrix and the restriction is nilpotent."""
    dim = basis.shape[1]
    if dim == 0:
        return True
    image = matrix @ basis
    compressed = basis.conj().T @ image
    tol = INVARIANCE_TOL * scale
    if np.linalg.norm(image - basis @ compressed) > tol:
        return False
    power = np.linalg.matrix_power(compressed, dim)
    return bool(np.linalg.norm(power) <= tol * max(1.0, float(np.linalg.norm(compressed))) ** (dim - 1))


def split_symmetry_block(matrix: np.ndarray, chains: Sequence[Sequence[np.ndarray]], floor: float) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of matrix with the generalized kernel spanned by symmetry chains split off.

    Each chain starts with a kernel vector followed by its generalized vectors. A chain is kept
    whole, or else by its leading vector, when the accumulated span stays invariant with a
    nilpotent restriction; vectors with norm <= floor are dropped. Returns (eigenvalues on the
    orthogonal complement of the kept span, eigenvalues of the restriction to it).
    """
    size = matrix.shape[0]
    scale = max(float(np.linalg.norm(matrix, ord=np.inf)), 1.0)
    accepted: List[np.ndarray] = []
    for chain in chains:
        for candidate in (list(chain), list(chain[:1])):
            columns = accepted + [c for c in candidate if np.linalg.norm(c) > floor]
            if len(columns) == len(accepted):
                break
            if _nilpotent_invariant(matrix, _orthonormal_columns(columns, size), scale):
                accepted = columns
                break
            logger.debug(f"Symmetry chain of length {len(candidate)} is not an invariant nilpotent block")
    basis = _orthonormal_columns(accepted, size)
    if basis.shape[1] == 0:
        return scipy.linalg.eigvals(matrix), np.zeros(0, dtype=complex)
    complement = scipy.linalg.null_space(basis.conj().T)
    rest = scipy.linalg.eigvals(complement.conj().T @ matrix @ complement)
    block = scipy.linalg.eigvals(basis.conj().T @ matrix @ basis)
    return rest, block


def count_sign_changes(values: np.ndarray, zero_level: float = STURM_ZERO_LEVEL) -> int:
    """Cyclic sign changes, ignoring samples below zero_level * max|values|."""
    threshold = zero_level * float(np.max(np.abs(values))) if values.size else 0.0
    signs = np.sign(values[np.abs(values) > threshold])
    if signs.size < 2:
        return 0
    return int(np.sum(signs != np.roll(signs, -1)))


class SpectralAnalyzer:
    """Linearized operators, their spectra and the stability verdict."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    # --- assembly -----------------------------------------------------------------

    def assemble_operator(self, phi: RealField, omega: float, alpha: float, kind: OperatorKind, profile_ref: str = "") -> OperatorMatrix:
        """L+ = Lambda^alpha + omega - 2 phi or L- = Lambda^alpha + omega - phi in the Fourier basis."""
        weights = {OperatorKind.LPLUS: 2.0, OperatorKind.LMINUS: 1.0}
        if kind not in weights:
            raise ValueError(f"assemble_operator builds L+ or L-, not {kind.value}")
        grid = phi.grid
        entries = spectral.symbol_diagonal(grid, alpha) + omega * np.eye(grid.n_points)
        entries = entries - weights[kind] * spectral.multiplication_matrix(phi)
        return OperatorMatrix(grid=grid, kind=kind, entries=entries, omega=omega, profile_ref=profile_ref)

    def assemble_lplus(self, profile: WaveProfile) -> OperatorMatrix:
        return self.assemble_operator(profile.phi, profile.omega, profile.alpha, OperatorKind.LPLUS, profile.profile_id)

    def assemble_lminus(self, profile: WaveProfile) -> OperatorMatrix:
        return self.assemble_operator(profile.phi, profile.omega, profile.alpha, OperatorKind.LMINUS, profile.profile_id)

    def assemble_kdv_linearization(self, lplus: OperatorMatrix) -> OperatorMatrix:
        """d/dx composed with L+."""
        entries = spectral.derivative_diagonal(lplus.grid) @ lplus.entries
        return OperatorMatrix(
            grid=lplus.grid, kind=OperatorKind.KDV_LINEARIZATION, entries=entries, omega=lplus.omega, profile_ref=lplus.profile_ref
        )

    def assemble_nls_linearization(self, lplus: OperatorMatrix, lminus: OperatorMatrix) -> OperatorMatrix:
        """J diag(L+, L-) = [[0, L-], [-L+, 0]]."""
        n = lplus.grid.n_points
        entries = np.zeros((2 * n, 2 * n), dtype=complex)
        entries[:n, n:] = lminus.entries
        entries[n:, :n] = -lplus.entries
        return OperatorMatrix(
            grid=lplus.grid, kind=OperatorKind.NLS_LINEARIZATION, entries=entries, omega=lplus.omega, profile_ref=lplus.profile_ref
        )

    # --- Hermitian spectra ----------------------------------------------------------

    def sym_spectrum(self, op: OperatorMatrix) -> Spectrum:
        """Ascending eigenvalues with L^2-orthonormal real eigenfunctions."""
        if not op.kind.hermitian:
            raise EigenSolverError(f"sym_spectrum needs a Hermitian operator, got {op.kind.value}")
        defect = op.hermitian_defect()
        if defect > HERMITIAN_TOL:
            raise EigenSolverError(f"{op.kind.value} matrix is not Hermitian (defect {defect:.3e})")
        grid = op.grid
        try:
            eigenvalues, vectors = scipy.linalg.eigh(_physical_matrix(op.entries, grid))
        except scipy.linalg.LinAlgError as e:
            raise EigenSolverError(f"eigh failed for {op.kind.value}: {str(e)}") from e
        scale = 1.0 / math.sqrt(grid.spacing)
        fields = [RealField.from_values(grid, scale * vectors[:, i]) for i in range(vectors.shape[1])]
        return eigenvalues, fields

    def weak_nondegeneracy(self, phi: Union[WaveProfile, RealField], kernel_vectors: Sequence[RealField]) -> float:
        """max |<phi, v>| / (||phi|| ||v||) over the kernel basis; 0 for an empty kernel."""
        phi = phi.phi if isinstance(phi, WaveProfile) else phi
        norm = phi.l2_norm()
        if norm == 0.0 or not kernel_vectors:
            return 0.0
        return max(abs(spectral.inner_l2(phi, v)) / (norm * v.l2_norm()) for v in kernel_vectors)

    def vk_index(self, phi: Union[WaveProfile, RealField], lplus: OperatorMatrix, spectrum: Optional[Spectrum] = None) -> float:
        """<L+^{-1} phi, phi> with L+ inverted off its numerical kernel."""
        phi = phi.phi if isinstance(phi, WaveProfile) else phi
        eigenvalues, vectors = spectrum if spectrum is not None else self.sym_spectrum(lplus)
        tol = kernel_tolerance(eigenvalues)
        kernel = [v for mu, v in zip(eigenvalues, vectors) if abs(mu) <= tol]
        angle = self.weak_nondegeneracy(phi, kernel)
        if angle > WEAK_NONDEGENERACY_TOL:
            raise IllPosedError(f"phi is not orthogonal to Ker L+ (angle {angle:.3e}); the VK index is undefined")
        return spectral.inner_l2(deflated_inverse(phi, eigenvalues, vectors), phi)

    def coercivity_gap(self, lplus: OperatorMatrix, span_fields: Sequence[RealField]) -> float:
        """Smallest eigenvalue of L+ on the orthogonal complement of span_fields."""
        physical = _physical_matrix(lplus.entries, lplus.grid)
        columns = [f.values for f in span_fields if f.l2_norm() > 0.0]
        if columns:
            basis = scipy.linalg.orth(np.column_stack(columns), rcond=1e-10)
        else:
            basis = np.zeros((lplus.grid.n_points, 0))
        if basis.shape[1] == 0:
            return float(scipy.linalg.eigvalsh(physical)[0])
        complement = scipy.linalg.null_space(basis.T)
        return float(scipy.linalg.eigvalsh(complement.T @ physical @ complement)[0])

    def sturm_sign_check(self, eigenvalues: np.ndarray, vectors: Sequence[RealField], count: int = STURM_COUNT) -> SturmReport:
        """The n-th eigenfunction (from 0) may change sign at most 2n times on the circle."""
        report = SturmReport()
        for n in range(min(count, len(vectors))):
            changes = count_sign_changes(vectors[n].values)
            report.sign_changes.append(changes)
            report.bounds.append(2 * n)
            if changes > 2 * n:
                report.violations.append(n)
        if report.violations:
            self.logger.warning(f"Sign-change bound violated for eigenfunctions {report.violations}")
        return report

    # --- dynamical spectra ------------------------------------------------------------

    def kdv_spectra(
        self, profile: WaveProfile, lplus: Optional[OperatorMatrix] = None, plus: Optional[Spectrum] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(dynamical spectrum, zero cluster) of d/dx L+.

        The zero-mean block is solved with the translation chain {phi', L+^{-1} phi} split off;
        that chain and the mean mode enter the dynamical spectrum as exact zeros, and their
        computed eigenvalues are returned as the zero cluster.
        """
        lplus = lplus if lplus is not None else self.assemble_lplus(profile)
        plus = plus if plus is not None else self.sym_spectrum(lplus)
        linearization = self.assemble_kdv_linearization(lplus)
        phi = profile.phi
        chain = [spectral.derivative(phi).coeffs[1:], deflated_inverse(phi, *plus).coeffs[1:]]
        floor = SYMMETRY_FLOOR * max(1.0, phi.l2_norm())
        try:
            rest, block = split_symmetry_block(linearization.entries[1:, 1:], [chain], floor)
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as e:
            raise EigenSolverError(f"eigvals failed for the KdV linearization: {str(e)}") from e
        cluster = np.append(block, 0.0 + 0.0j)
        return np.concatenate([rest, np.zeros(cluster.size, dtype=complex)]), cluster

    def nls_spectra(
        self,
        profile: WaveProfile,
        lplus: Optional[OperatorMatrix] = None,
        lminus: Optional[OperatorMatrix] = None,
        plus: Optional[Spectrum] = None,
        minus: Optional[Spectrum] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(dynamical spectrum, zero cluster) of J diag(L+, L-), solved in the real representation.

        The translation chain {(phi', 0), (0, L-^{-1} phi')} and the phase chain
        {(0, phi), (L+^{-1} phi, 0)} are split off when they span a nilpotent invariant block.
        """
        lplus = lplus if lplus is not None else self.assemble_lplus(profile)
        lminus = lminus if lminus is not None else self.assemble_lminus(profile)
        plus = plus if plus is not None else self.sym_spectrum(lplus)
        minus = minus if minus is not None else self.sym_spectrum(lminus)
        n = lplus.grid.n_points
        block = np.zeros((2 * n, 2 * n))
        block[:n, n:] = _physical_matrix(lminus.entries, lminus.grid)
        block[n:, :n] = -_physical_matrix(lplus.entries, lplus.grid)

        phi = profile.phi
        dphi = spectral.derivative(phi)
        zero = np.zeros(n)
        chains = [
            [np.concatenate([dphi.values, zero]), np.concatenate([zero, deflated_inverse(dphi, *minus).values])],
            [np.concatenate([zero, phi.values]), np.concatenate([deflated_inverse(phi, *plus).values, zero])],
        ]
        floor = SYMMETRY_FLOOR * max(1.0, float(np.linalg.norm(phi.values)))
        try:
            rest, cluster = split_symmetry_block(block, chains, floor)
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as e:
            raise EigenSolverError(f"eigvals failed for the NLS linearization: {str(e)}") from e
        return np.concatenate([rest, np.zeros(cluster.size, dtype=complex)]), cluster

    def kdv_dynamical_spectrum(self, profile: WaveProfile, lplus: Optional[OperatorMatrix] = None) -> np.ndarray:
        """Eigenvalues of d/dx L+, generalized kernel included as exact zeros."""
        return self.kdv_spectra(profile, lplus)[0]

    def nls_dynamical_spectrum(
        self, profile: WaveProfile, lplus: Optional[OperatorMatrix] = None, lminus: Optional[OperatorMatrix] = None
    ) -> np.ndarray:
        """Eigenvalues of J diag(L+, L-), generalized kernel included as exact zeros."""
        return self.nls_spectra(profile, lplus, lminus)[0]

    # --- verdict ------------------------------------------------------------------------

    def stability_verdict(self, report: SpectrumReport, problem: ProblemKind, a_param: float = 0.0) -> Tuple[Verdict, List[str]]:
        """Index test (n(L+) = 1, weak non-degeneracy, VK < 0, and L- conditions for NLS) cross-checked against the dynamics."""
        notes: List[str] = []
        index_stable = True
        if report.n_neg_plus != 1:
            index_stable = False
            notes.append(f"n(L+) = {report.n_neg_plus}, expected 1")
        if report.phi_kernel_angle > WEAK_NONDEGENERACY_TOL:
            index_stable = False
            notes.append(f"weak non-degeneracy fails: angle {report.phi_kernel_angle:.3e}")
        if report.vk_index is None:
            index_stable = False
            notes.append("VK index undefined")
        elif report.vk_index >= 0:
            index_stable = False
            notes.append(f"VK index {report.vk_index:.6g} is not negative")
        if problem == ProblemKind.NLS:
            if a_param != 0.0:
                index_stable = False
                notes.append(f"standing waves need a = 0, got a = {a_param}")
            if report.n_neg_minus != 0:
                index_stable = False
                notes.append(f"n(L-) = {report.n_neg_minus}, expected 0")
            if report.kernel_dim_minus != 1 or report.lminus_phi_residual > LMINUS_KERNEL_TOL:
                index_stable = False
                notes.append(
                    f"Ker L- is not span[phi]: dim {report.kernel_dim_minus}, ||L- phi||/||phi|| = {report.lminus_phi_residual:.3e}"
                )

        dynamics_stable = report.max_real_part <= report.real_part_tol
        if not dynamics_stable:
            notes.append(f"max Re of the dynamical spectrum {report.max_real_part:.3e} exceeds {report.real_part_tol:.1e}")

        if index_stable and dynamics_stable:
            return Verdict.SPECTRALLY_STABLE, notes
        if not index_stable and not dynamics_stable:
            return Verdict.UNSTABLE, notes
        notes.append(
            "index test and dynamical spectrum disagree: "
            f"index {'stable' if index_stable else 'not stable'}, dynamics {'stable' if dynamics_stable else 'unstable'}"
        )
        return Verdict.INCONCLUSIVE, notes

    def analyze(self, profile: WaveProfile, problem: ProblemKind = ProblemKind.KDV) -> SpectrumReport:
        """Complete spectral report of a wave."""
        phi = profile.phi
        lplus = self.assemble_lplus(profile)
        lminus = self.assemble_lminus(profile)
        plus = self.sym_spectrum(lplus)
        minus = self.sym_spectrum(lminus)
        eig_plus, vec_plus = plus
        eig_minus, _ = minus

        tol_plus = kernel_tolerance(eig_plus)
        n_neg_plus, kernel_dim_plus = count_negative(eig_plus, tol_plus)
        n_neg_minus, kernel_dim_minus = count_negative(eig_minus, kernel_tolerance(eig_minus))
        kernel_vectors = [v for mu, v in zip(eig_plus, vec_plus) if abs(mu) <= tol_plus]
        angle = self.weak_nondegeneracy(phi, kernel_vectors)

        notes: List[str] = []
        try:
            vk = self.vk_index(phi, lplus, plus)
        except IllPosedError as e:
            vk = None
            notes.append(str(e))

        dphi = spectral.derivative(phi)
        kappa = self.coercivity_gap(lplus, [phi, dphi])
        chi = vec_plus[0]
        overlap = spectral.inner_l2(chi, phi)
        if overlap < 0:
            overlap = -overlap

        norm = phi.l2_norm()
        lminus_phi = float(np.linalg.norm(lminus.entries @ phi.coeffs)) / norm
        dnorm = dphi.l2_norm()
        lplus_dphi = float(np.linalg.norm(lplus.entries @ dphi.coeffs)) / dnorm if dnorm > 1e-12 * max(norm, 1.0) else None

        if problem == ProblemKind.KDV:
            spectrum, cluster = self.kdv_spectra(profile, lplus, plus)
        else:
            spectrum, cluster = self.nls_spectra(profile, lplus, lminus, plus, minus)

        report = SpectrumReport(
            profile_ref=profile.profile_id,
            problem=problem,
            eigenvalues_Lplus=eig_plus,
            eigenvalues_Lminus=eig_minus,
            kernel_tol=tol_plus,
            n_neg_plus=n_neg_plus,
            n_neg_minus=n_neg_minus,
            kernel_dim_plus=kernel_dim_plus,
            kernel_dim_minus=kernel_dim_minus,
            kernel_vectors=kernel_vectors,
            phi_kernel_angle=angle,
            vk_index=vk,
            coercivity_kappa=kappa,
            lowest_eigenvalue=float(eig_plus[0]),
            chi_phi_overlap=overlap,
            lminus_phi_residual=lminus_phi,
            lplus_dphi_residual=lplus_dphi,
            dynamical_spectrum=spectrum,
            zero_cluster=cluster,
            max_real_part=float(np.max(spectrum.real)) if spectrum.size else 0.0,
            real_part_tol=REAL_PART_TOL,
            sturm=self.sturm_sign_check(eig_plus, vec_plus),
            notes=notes,
        )
        verdict, verdict_notes = self.stability_verdict(report, problem, profile.a_param)
        report.verdict = verdict
        report.notes.extend(verdict_notes)
        self.logger.info(
            f"Spectrum of {profile.profile_id}: n(L+)={n_neg_plus}, dim Ker L+={kernel_dim_plus}, "
            f"VK={vk}, kappa={kappa:.6g}, max Re={report.max_real_part:.3e}, verdict={verdict.value}"
        )
        return report
