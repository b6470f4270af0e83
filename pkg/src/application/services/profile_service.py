"""Constrained minimization of E_a on the L^2 sphere.

The waves solve Lambda^alpha phi + omega phi - phi^2 + a = 0 with ||phi||^2 = lambda,
where omega is the Lagrange multiplier of the constraint.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from ...domain import spectral
from ...domain.entities import Grid, RealField, SmoothnessReport, SolveDiagnostics, SolverOptions, StepRule, WaveProfile
from ...domain.exceptions import (
    ConvergenceError,
    GridMismatchError,
    IllPosedError,
    NewtonDivergenceError,
    NumericalFailure,
    SingularJacobianError,
)
from ...infrastructure.parallel import run_jobs

logger = logging.getLogger(__name__)

ARMIJO_CONSTANT = 1e-4
ENERGY_SLACK = 1e-14
MAX_STEP = 4.0
MAX_BACKTRACKS = 60
NEWTON_ENTRY = 1e-2
NEWTON_MAX_ITERS = 30
SINGULAR_CONDITION = 1e14
SEED_AGREEMENT = 1e-8
SMOOTHNESS_POWERS = (2, 4, 6)


# --- functional and multipliers ---------------------------------------------------

def energy(phi: RealField, a: float, alpha: float) -> float:
    """E_a[phi] = 1/2 ||Lambda^{alpha/2} phi||^2 - 1/3 int |phi|^3 + a int |phi|."""
    h = phi.grid.spacing
    magnitude = np.abs(phi.values)
    kinetic = 0.5 * spectral.seminorm_sobolev(phi, alpha / 2.0) ** 2
    return float(kinetic - h * np.sum(magnitude ** 3) / 3.0 + a * h * np.sum(magnitude))


def sphere_project(phi: RealField, lam: float) -> RealField:
    norm = phi.l2_norm()
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("cannot project a zero or non-finite field onto the sphere")
    return phi.scaled(math.sqrt(lam) / norm)


def _unconstrained_gradient(phi: RealField, a: float, alpha: float) -> np.ndarray:
    return spectral.apply_symbol(phi, alpha).values - phi.values ** 2 + a


def constrained_gradient(phi: RealField, a: float, alpha: float, lam: float) -> RealField:
    """G = Lambda^alpha phi - phi^2 + a + omega phi, tangent to the sphere.

    omega is taken as -<g, phi>/||phi||^2, which is the energy formula whenever
    ||phi||^2 = lam.
    """
    g = _unconstrained_gradient(phi, a, alpha)
    norm_sq = phi.grid.spacing * float(np.dot(phi.values, phi.values))
    if norm_sq == 0.0:
        return RealField.from_values(phi.grid, g)
    omega = -phi.grid.spacing * float(np.dot(g, phi.values)) / norm_sq
    return RealField.from_values(phi.grid, g + omega * phi.values)


def omega_from_energy(phi: RealField, a: float, lam: float, alpha: float) -> float:
    """omega = (int phi^3 - ||Lambda^{alpha/2} phi||^2 - a int phi) / lambda."""
    h = phi.grid.spacing
    cubic = h * float(np.sum(phi.values ** 3))
    kinetic = spectral.seminorm_sobolev(phi, alpha / 2.0) ** 2
    mean = h * float(np.sum(phi.values))
    return (cubic - kinetic - a * mean) / lam


def omega_from_mass(phi: RealField, a: float, lam: float) -> float:
    """omega = (lambda - 2T a) / int phi, from integrating the profile equation."""
    total = spectral.integral(phi)
    scale = phi.grid.spacing * float(np.sum(np.abs(phi.values)))
    if scale == 0.0 or abs(total) <= 1e-12 * scale:
        raise IllPosedError("omega_from_mass needs a field with non-vanishing mean")
    return (lam - phi.grid.length * a) / total


def residual(phi: RealField, omega: float, a: float, alpha: float) -> float:
    """||Lambda^alpha phi + omega phi - phi^2 + a||_{L^2}."""
    r = _unconstrained_gradient(phi, a, alpha) + omega * phi.values
    return float(math.sqrt(phi.grid.spacing * float(np.dot(r, r))))


def make_profile(
    phi: RealField,
    omega: float,
    a: float,
    lam: float,
    alpha: float,
    converged: bool = True,
    profile_id: Optional[str] = None,
) -> WaveProfile:
    """Assemble a WaveProfile and its consistency diagnostics."""
    omega_e = omega_from_energy(phi, a, lam, alpha)
    try:
        omega_m = omega_from_mass(phi, a, lam)
        consistency = abs(omega_e - omega_m) / max(abs(omega_e), abs(omega_m), 1e-12)
    except IllPosedError:
        omega_m = None
        consistency = 0.0
    extra = {"profile_id": profile_id} if profile_id else {}
    return WaveProfile(
        phi=phi,
        omega=omega,
        a_param=a,
        lambda_=lam,
        alpha=alpha,
        residual_l2=residual(phi, omega, a, alpha),
        omega_consistency=consistency,
        omega_energy=omega_e,
        omega_mass=omega_m,
        energy=energy(phi, a, alpha),
        converged=converged,
        **extra,
    )


# --- closed forms and transformations ----------------------------------------------

def constant_wave(lam: float, a: float, grid: Grid, alpha: float) -> WaveProfile:
    """The constant solution c = sqrt(lambda/2T), omega = (c^2 - a)/c."""
    c = math.sqrt(lam / grid.length)
    omega = (c * c - a) / c
    phi = RealField.from_values(grid, np.full(grid.n_points, c))
    return make_profile(phi, omega, a, lam, alpha)


def rescale_wave(profile: WaveProfile, new_half_period: float) -> WaveProfile:
    """Map a wave on [-T, T] to [-T', T'] by phi(x) -> s^{-alpha} phi(x/s), s = T'/T."""
    if not new_half_period > 0:
        raise ValueError(f"new_half_period must be positive, got {new_half_period}")
    s = new_half_period / profile.half_period
    alpha = profile.alpha
    grid = spectral.make_grid(profile.grid.n_points, new_half_period)
    phi = RealField.from_values(grid, s ** (-alpha) * profile.phi.values)
    return make_profile(
        phi,
        s ** (-alpha) * profile.omega,
        s ** (-2.0 * alpha) * profile.a_param,
        s ** (1.0 - 2.0 * alpha) * profile.lambda_,
        alpha,
        converged=profile.converged,
    )


def smoothness_check(phi: RealField, threshold: float = 1e-10) -> SmoothnessReport:
    """Fourier decay of a profile; a tail plateau above `threshold` flags under-resolution."""
    magnitude = np.abs(phi.coeffs)
    k = np.abs(phi.grid.wavenumbers).astype(float)
    scale = float(np.max(magnitude))
    if scale == 0.0:
        return SmoothnessReport(weighted_max={p: 0.0 for p in SMOOTHNESS_POWERS}, tail_level=0.0, resolved=True, threshold=threshold)
    relative = magnitude / scale
    weighted = {p: float(np.max(relative * (1.0 + k) ** p)) for p in SMOOTHNESS_POWERS}
    tail = float(np.max(relative[k >= phi.n_points * spectral.DEALIAS_FRACTION]))
    report = SmoothnessReport(weighted_max=weighted, tail_level=tail, resolved=tail <= threshold, threshold=threshold)
    if not report.resolved:
        logger.warning(f"Profile under-resolved: spectral tail {tail:.3e} above {threshold:.1e}")
    return report


def centre_profile(phi: RealField) -> RealField:
    """Translate the peak of the trigonometric interpolant to x = 0."""
    grid = phi.grid
    j = int(np.argmax(phi.values))
    x0 = float(grid.nodes[j])
    result = scipy.optimize.minimize_scalar(
        lambda x: -float(spectral.evaluate(phi, x)),
        bounds=(x0 - grid.spacing, x0 + grid.spacing),
        method="bounded",
        options={"xatol": 1e-13},
    )
    peak = float(result.x) if result.success else x0
    return spectral.translate(phi, peak)


def _even_embedding(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Embedding of cosine coefficients c_0..c_{N/2} into FFT slots, and the Parseval weights."""
    half = n // 2
    embed = np.zeros((n, half + 1))
    embed[0, 0] = 1.0
    embed[half, half] = 1.0
    for k in range(1, half):
        embed[k, k] = 1.0
        embed[n - k, k] = 1.0
    weights = np.full(half + 1, 2.0)
    weights[0] = weights[half] = 1.0
    return embed, weights


class ProfileSolver:
    """Multi-start projected gradient descent with Newton polish."""

    def __init__(self, options: Optional[SolverOptions] = None):
        self.options = options or SolverOptions()
        self.logger = logging.getLogger(__name__)

    def minimize(self, lam: float, a: float, alpha: float, grid: Grid) -> WaveProfile:
        profile, _ = self.solve(lam, a, alpha, grid)
        return profile

    def solve(self, lam: float, a: float, alpha: float, grid: Grid) -> Tuple[WaveProfile, SolveDiagnostics]:
        """Lowest-energy wave across the multi-starts, with its diagnostics."""
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        if not 0.5 < alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1/2, 2], got {alpha}")

        count = self.options.seeds
        runs = self._run_seeds(range(count), lam, a, alpha, grid)
        disagreement = self._disagreement(runs)
        if count > 1 and disagreement > SEED_AGREEMENT:
            self.logger.warning(
                f"Multi-start energies disagree by {disagreement:.3e} at lambda={lam}; doubling seeds to {2 * count}"
            )
            runs += self._run_seeds(range(count, 2 * count), lam, a, alpha, grid)
            disagreement = self._disagreement(runs)
            if disagreement > SEED_AGREEMENT:
                self.logger.warning(f"Multi-start disagreement persists: {disagreement:.3e}")

        finite = [(i, run) for i, run in enumerate(runs) if run is not None]
        if not finite:
            raise ConvergenceError(f"every seed failed for lambda={lam}, a={a}, alpha={alpha}")
        best_index, (profile, diagnostics) = min(finite, key=lambda item: item[1][0].energy)

        diagnostics.seed_energies = [run[0].energy if run is not None else None for run in runs]
        diagnostics.seed_disagreement = disagreement
        diagnostics.best_seed = best_index
        if disagreement > SEED_AGREEMENT:
            diagnostics.messages.append(f"multi-start disagreement {disagreement:.3e}")

        self.logger.info(
            f"Solved lambda={lam}, a={a}, alpha={alpha}, T={grid.half_period}: "
            f"omega={profile.omega:.12g}, energy={profile.energy:.12g}, residual={profile.residual_l2:.2e}"
        )
        return profile, diagnostics

    @staticmethod
    def _disagreement(runs) -> float:
        energies = [run[0].energy for run in runs if run is not None]
        return float(max(energies) - min(energies)) if len(energies) > 1 else 0.0

    def _run_seeds(self, indices, lam, a, alpha, grid) -> List[Optional[Tuple[WaveProfile, SolveDiagnostics]]]:
        def run(index: int):
            try:
                return self._run_seed(index, lam, a, alpha, grid)
            except (NumericalFailure, ValueError) as e:
                self.logger.error(f"Seed {index} failed for lambda={lam}: {str(e)}")
                return None

        return run_jobs(run, indices, self.options.jobs)

    def _run_seed(self, index: int, lam: float, a: float, alpha: float, grid: Grid) -> Tuple[WaveProfile, SolveDiagnostics]:
        start = self.initial_guess(index, lam, grid)
        phi, diagnostics = self.descend(start, lam, a, alpha)
        omega = omega_from_energy(phi, a, lam, alpha)
        profile = make_profile(phi, omega, a, lam, alpha, converged=diagnostics.descent_converged)
        if self.options.newton_polish:
            try:
                profile = self.newton_polish(profile, self.options.newton_tol, history=diagnostics.newton_residuals)
            except NumericalFailure as e:
                self.logger.warning(f"Newton polish skipped for seed {index}: {str(e)}")
                diagnostics.messages.append(f"newton: {str(e)}")
        return profile, diagnostics

    def initial_guess(self, index: int, lam: float, grid: Grid) -> RealField:
        """Even, non-negative starting point on the sphere for seed `index`."""
        x = grid.nodes
        wave = np.cos(np.pi * x / grid.half_period)
        seed_profile = self.options.seed_profile
        if index == 0 and seed_profile is not None:
            if seed_profile.grid != grid:
                raise GridMismatchError(f"seed profile lives on {seed_profile.grid}, expected {grid}")
            values = seed_profile.values
        elif index == 0:
            values = 1.0 + wave
        elif index == 1:
            values = 1.0 + 0.01 * wave
        else:
            rng = np.random.default_rng(self.options.rng_seed + index)
            width = rng.uniform(0.5, 4.0)
            values = np.exp(width * (wave - 1.0))
            for m in range(2, 5):
                values = values + rng.uniform(0.0, 0.2) / m * np.cos(m * np.pi * x / grid.half_period)
            values = spectral.rearrange_values(values)
        field = spectral.symmetrize(RealField.from_values(grid, np.maximum(values, 0.0)))
        if field.l2_norm() == 0.0:
            field = RealField.from_values(grid, np.ones(grid.n_points))
        return sphere_project(field, lam)

    def descend(self, start: RealField, lam: float, a: float, alpha: float) -> Tuple[RealField, SolveDiagnostics]:
        """Preconditioned projected gradient descent from `start` (assumed even, on the sphere)."""
        opts = self.options
        grid = start.grid
        h = grid.spacing
        sym = spectral.symbol(grid, alpha)
        mirror = grid.mirror_index()
        tolerance = opts.grad_tol * max(1.0, math.sqrt(lam))

        def energy_of(v: np.ndarray) -> float:
            c = grid.forward(v)
            magnitude = np.abs(v)
            return float(0.5 * np.sum(sym * np.abs(c) ** 2) - h * np.sum(magnitude ** 3) / 3.0 + a * h * np.sum(magnitude))

        def smooth(v: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
            return np.real(grid.inverse(multiplier * grid.forward(v)))

        def retract(v: np.ndarray) -> Optional[np.ndarray]:
            w = np.maximum(v, 0.0)
            w = 0.5 * (w + w[mirror])
            norm_sq = h * float(np.dot(w, w))
            if not np.isfinite(norm_sq) or norm_sq == 0.0:
                return None
            return w * math.sqrt(lam / norm_sq)

        v = start.values.copy()
        current = energy_of(v)
        diagnostics = SolveDiagnostics(energy_history=[current])
        step = opts.initial_step
        grad_norm = math.inf
        iteration = 0

        for iteration in range(1, opts.max_iters + 1):
            g = smooth(v, sym) - v ** 2 + a
            omega = -float(np.dot(g, v)) / float(np.dot(v, v))
            gradient = g + omega * v
            grad_norm = math.sqrt(h * float(np.dot(gradient, gradient)))
            if not np.isfinite(grad_norm) or not np.isfinite(current):
                raise ConvergenceError(
                    f"non-finite iterate at descent iteration {iteration}",
                    last_iterate=RealField.from_values(grid, np.nan_to_num(v)),
                )
            if grad_norm <= tolerance:
                diagnostics.descent_converged = True
                break

            precond = 1.0 / (sym + 1.0 + abs(omega))
            pg = smooth(g, precond)
            pphi = smooth(v, precond)
            direction = -(pg - float(np.dot(pg, v)) / float(np.dot(pphi, v)) * pphi)
            slope = h * float(np.dot(g, direction))
            if slope >= 0.0:
                diagnostics.messages.append(f"descent stalled at iteration {iteration}: no descent direction")
                break

            accepted = None
            trial_step = step
            for _ in range(MAX_BACKTRACKS):
                trial = retract(v + trial_step * direction)
                if trial is not None:
                    trial_energy = energy_of(trial)
                    if opts.step_rule == StepRule.BACKTRACKING:
                        bound = current + ARMIJO_CONSTANT * trial_step * slope + ENERGY_SLACK
                    else:
                        bound = current + ENERGY_SLACK
                    if trial_energy <= bound:
                        accepted = (trial, trial_energy)
                        break
                trial_step *= 0.5
            if accepted is None:
                diagnostics.messages.append(f"line search failed at iteration {iteration}")
                break

            v, current = accepted
            diagnostics.energy_history.append(current)
            step = min(2.0 * trial_step, MAX_STEP) if opts.step_rule == StepRule.BACKTRACKING else trial_step

            if opts.rearrange_every and iteration % opts.rearrange_every == 0:
                rearranged = retract(spectral.rearrange_values(v))
                if rearranged is not None:
                    rearranged_energy = energy_of(rearranged)
                    if rearranged_energy <= current + ENERGY_SLACK:
                        v, current = rearranged, rearranged_energy
                        diagnostics.energy_history[-1] = current

        diagnostics.iterations = iteration
        diagnostics.descent_residual = grad_norm
        if not diagnostics.descent_converged:
            self.logger.warning(
                f"Descent stopped after {iteration} iterations with gradient {grad_norm:.3e} (target {tolerance:.1e})"
            )
        return RealField.from_values(grid, v), diagnostics

    def newton_polish(self, profile: WaveProfile, tol: Optional[float] = None, history: Optional[List[float]] = None) -> WaveProfile:
        """Newton iteration on {profile equation, ||phi||^2 = lambda} in the even subspace.

        Unknowns are the cosine coefficients of phi and omega; the translation
        mode phi' is odd and drops out, so the bordered Jacobian is regular at
        non-degenerate waves.
        """
        tol = self.options.newton_tol if tol is None else tol
        history = history if history is not None else []
        phi = profile.phi
        grid = phi.grid
        alpha, a, lam = profile.alpha, profile.a_param, profile.lambda_
        scale = 1.0 + phi.l2_norm()

        start = residual(phi, profile.omega, a, alpha)
        if not np.isfinite(start) or start > NEWTON_ENTRY * scale:
            raise NewtonDivergenceError(
                f"residual {start:.3e} outside the Newton basin (limit {NEWTON_ENTRY * scale:.3e})"
            )
        constraint = phi.l2_norm() ** 2 - lam
        if start <= tol * scale and abs(constraint) <= tol * max(lam, 1.0):
            history.append(start)
            return profile

        n = grid.n_points
        half = n // 2
        sym = spectral.symbol(grid, alpha)
        embed, weights = _even_embedding(n)
        even = 0.5 * (phi.coeffs + phi.coeffs[grid.mirror_index()])
        c = np.real(even[: half + 1]).copy()
        omega = float(profile.omega)
        previous = start

        for iteration in range(NEWTON_MAX_ITERS + 1):
            full = embed @ c
            values = np.real(grid.inverse(full))
            forcing = (sym + omega) * full - grid.forward(values ** 2)
            forcing[0] += a * math.sqrt(grid.length)
            constraint = float(np.dot(weights, c * c)) - lam
            res = float(np.sqrt(np.sum(np.abs(forcing) ** 2)))
            history.append(res)

            if not np.isfinite(res) or not np.isfinite(omega):
                raise NewtonDivergenceError(f"Newton produced non-finite values at iteration {iteration}")
            if iteration > 0 and res > 10.0 * previous:
                raise NewtonDivergenceError(f"Newton residual grew from {previous:.3e} to {res:.3e}")
            if res <= tol * scale and abs(constraint) <= tol * max(lam, 1.0):
                break
            if iteration == NEWTON_MAX_ITERS:
                raise ConvergenceError(
                    f"Newton stalled at residual {res:.3e} after {iteration} iterations",
                    last_iterate=RealField.from_coeffs(grid, full),
                )
            previous = res

            potential = RealField.from_values(grid, values)
            lplus = np.diag(sym + omega) - 2.0 * spectral.multiplication_matrix(potential)
            jacobian = np.zeros((half + 2, half + 2))
            jacobian[: half + 1, : half + 1] = np.real(lplus @ embed)[: half + 1]
            jacobian[: half + 1, half + 1] = c
            jacobian[half + 1, : half + 1] = 2.0 * weights * c
            rhs = -np.append(np.real(forcing[: half + 1]), constraint)

            condition = np.linalg.cond(jacobian)
            if not np.isfinite(condition) or condition > SINGULAR_CONDITION:
                raise SingularJacobianError(
                    f"Newton Jacobian is singular (condition {condition:.3e}); omega={omega:.6g} may be degenerate"
                )
            try:
                delta = scipy.linalg.solve(jacobian, rhs)
            except (scipy.linalg.LinAlgError, ValueError) as e:
                raise SingularJacobianError(f"Newton solve failed: {str(e)}") from e
            c = c + delta[: half + 1]
            omega = omega + float(delta[half + 1])

        polished = RealField.from_coeffs(grid, embed @ c)
        self.logger.debug(f"Newton polish converged in {iteration} iterations, residual {res:.3e}")
        return make_profile(polished, omega, a, lam, alpha, converged=True, profile_id=profile.profile_id)
