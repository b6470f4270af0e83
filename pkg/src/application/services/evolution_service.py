"""Pseudospectral time integration of fKdV and fNLS.

fKdV:  u_t = Lambda^alpha u_x - (u^2)_x
fNLS:  u_t = -i Lambda^alpha u + i |u| u

Both are advanced with the Lawson integrating-factor RK4 scheme: the linear
part is propagated exactly per mode and RK4 acts on the transformed nonlinearity.
"""

import logging
import math
from typing import Iterator, Optional, Tuple, Union

import numpy as np
import scipy.optimize

from ...domain import spectral
from ...domain.entities import (
    AnyField,
    ComplexField,
    ConservedTriple,
    DriftSeries,
    Equation,
    EvolutionConfig,
    Grid,
    PerturbationKind,
    RealField,
    SobolevIndex,
    StabilityRunReport,
    WaveProfile,
)
from ...domain.exceptions import BlowUpError
from .spectral_analysis_service import SpectralAnalyzer

logger = logging.getLogger(__name__)

BLOW_UP_FACTOR = 1e6
PERTURBATION_BAND = 8
MAX_DEFAULT_STEP = 1e-3


def _linear_multiplier(grid: Grid, alpha: float, equation: Equation) -> np.ndarray:
    if equation == Equation.FKDV:
        return spectral.derivative_multiplier(grid) * spectral.symbol(grid, alpha)
    return -1j * spectral.symbol(grid, alpha)


class _IntegratingFactorRK4:
    """Lawson RK4 on coefficient vectors for a fixed (grid, alpha, equation, dt)."""

    def __init__(self, grid: Grid, alpha: float, equation: Equation, dt: float, dealias: bool = True):
        self.grid = grid
        self.equation = equation
        self.dt = dt
        linear = _linear_multiplier(grid, alpha, equation)
        self.half = np.exp(0.5 * dt * linear)
        self.full = self.half ** 2
        self.mask = spectral.dealias_mask(grid) if dealias else np.ones(grid.n_points, dtype=bool)
        self.ddx = spectral.derivative_multiplier(grid)

    def nonlinear(self, coeffs: np.ndarray) -> np.ndarray:
        grid = self.grid
        if self.equation == Equation.FKDV:
            u = np.real(grid.inverse(coeffs))
            return -self.ddx * np.where(self.mask, grid.forward(u * u), 0.0)
        u = grid.inverse(coeffs)
        return 1j * np.where(self.mask, grid.forward(np.abs(u) * u), 0.0)

    def step(self, coeffs: np.ndarray) -> np.ndarray:
        dt, half, full = self.dt, self.half, self.full
        k1 = dt * self.nonlinear(coeffs)
        k2 = dt * self.nonlinear(half * (coeffs + 0.5 * k1))
        k3 = dt * self.nonlinear(half * coeffs + 0.5 * k2)
        k4 = dt * self.nonlinear(full * coeffs + half * k3)
        return full * coeffs + (full * k1 + 2.0 * half * (k2 + k3) + k4) / 6.0


def _as_state(u: AnyField, equation: Equation) -> AnyField:
    if equation == Equation.FKDV:
        if not isinstance(u, RealField):
            raise ValueError("fKdV evolves real fields")
        return u
    return u if isinstance(u, ComplexField) else ComplexField.from_real(u)


def _field_from(coeffs: np.ndarray, grid: Grid, equation: Equation) -> AnyField:
    if equation == Equation.FKDV:
        return RealField.from_coeffs(grid, coeffs)
    return ComplexField.from_coeffs(grid, coeffs)


def step_fkdv(u: RealField, dt: float, alpha: float, dealias: bool = True) -> RealField:
    """One integrating-factor RK4 step of fKdV."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    stepper = _IntegratingFactorRK4(u.grid, alpha, Equation.FKDV, dt, dealias)
    result = RealField.from_coeffs(u.grid, stepper.step(u.coeffs))
    _check_finite(result, u.max_abs())
    return result


def step_fnls(u: ComplexField, dt: float, alpha: float, dealias: bool = True) -> ComplexField:
    """One integrating-factor RK4 step of fNLS."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u = _as_state(u, Equation.FNLS)
    stepper = _IntegratingFactorRK4(u.grid, alpha, Equation.FNLS, dt, dealias)
    result = ComplexField.from_coeffs(u.grid, stepper.step(u.coeffs))
    _check_finite(result, u.max_abs())
    return result


def _check_finite(u: AnyField, reference: float) -> None:
    size = u.max_abs()
    if not np.isfinite(size) or size > BLOW_UP_FACTOR * max(reference, 1.0):
        raise BlowUpError(f"solution blew up: max|u| = {size:.3e}")


def conserved(u: AnyField, alpha: float) -> ConservedTriple:
    """P = int |u|^2, H = 1/2 ||Lambda^{alpha/2} u||^2 - 1/3 int u^3 (|u|^3 for complex u), M = int u."""
    h = u.grid.spacing
    kinetic = 0.5 * spectral.seminorm_sobolev(u, alpha / 2.0) ** 2
    if isinstance(u, RealField):
        cubic = h * float(np.sum(u.values ** 3))
    else:
        cubic = h * float(np.sum(np.abs(u.values) ** 3))
    mass = complex(h * np.sum(u.values))
    return ConservedTriple(
        momentum_p=h * float(np.sum(np.abs(u.values) ** 2)),
        hamiltonian_h=kinetic - cubic / 3.0,
        mass_m_re=mass.real,
        mass_m_im=mass.imag,
    )


def _shift_derivative_factors(grid: Grid, shift: float) -> np.ndarray:
    factors = 1j * grid.frequencies * np.exp(1j * grid.frequencies * shift)
    nyq = grid.nyquist_slot
    factors[nyq] = -grid.frequencies[nyq] * math.sin(grid.frequencies[nyq] * shift)
    return factors


def _wrap(shift: float, half_period: float) -> float:
    return (shift + half_period) % (2.0 * half_period) - half_period


def _best_shift(weighted: np.ndarray, grid: Grid, objective: str) -> float:
    """Shift maximizing Re C(y) ('real') or |C(y)|^2 ('modulus'), C(y) = sum weighted * e^{i pi k y / T}."""

    def correlation(y: float) -> complex:
        return complex(np.sum(weighted * spectral.shift_factors(grid, y)))

    def slope(y: float) -> float:
        c_prime = complex(np.sum(weighted * _shift_derivative_factors(grid, y)))
        if objective == "real":
            return c_prime.real
        return 2.0 * (np.conj(correlation(y)) * c_prime).real

    def value(y: float) -> float:
        c = correlation(y)
        return c.real if objective == "real" else abs(c) ** 2

    samples = grid.n_points * np.fft.ifft(weighted)
    scores = samples.real if objective == "real" else np.abs(samples) ** 2
    m = int(np.argmax(scores))
    h = grid.spacing
    centre = m * h
    left, right = centre - h, centre + h
    g_left, g_centre, g_right = slope(left), slope(centre), slope(right)
    if g_centre == 0.0:
        return centre
    try:
        if g_left > 0.0 > g_centre:
            return scipy.optimize.brentq(slope, left, centre, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if g_centre > 0.0 > g_right:
            return scipy.optimize.brentq(slope, centre, right, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    except ValueError:
        pass
    result = scipy.optimize.minimize_scalar(lambda y: -value(y), bounds=(left, right), method="bounded", options={"xatol": 1e-14})
    return float(result.x)


def orbital_distance_kdv(u: RealField, phi: RealField, s: Union[SobolevIndex, float]) -> Tuple[float, float]:
    """min over y of ||u(. + y) - phi||_{H^s}; returns (distance, y)."""
    index = s if isinstance(s, SobolevIndex) else SobolevIndex(s=s)
    spectral.check_same_grid(u, phi)
    weights = index.weights(phi.grid)
    shift = _best_shift(weights * u.coeffs * np.conj(phi.coeffs), phi.grid, "real")
    distance = spectral.norm_sobolev(spectral.translate(u, shift) - phi, index)
    return distance, _wrap(shift, phi.grid.half_period)


def orbital_distance_nls(u: ComplexField, phi: RealField, s: Union[SobolevIndex, float]) -> Tuple[float, float, float]:
    """min over (y, theta) of ||u(. + y) - e^{i theta} phi||_{H^s}; returns (distance, y, theta in [0, 2 pi))."""
    index = s if isinstance(s, SobolevIndex) else SobolevIndex(s=s)
    u = _as_state(u, Equation.FNLS)
    spectral.check_same_grid(u, phi)
    grid = phi.grid
    weighted = index.weights(grid) * u.coeffs * np.conj(phi.coeffs)
    shift = _best_shift(weighted, grid, "modulus")
    correlation = complex(np.sum(weighted * spectral.shift_factors(grid, shift)))
    theta = float(np.angle(correlation)) % (2.0 * math.pi) if correlation != 0 else 0.0
    target = ComplexField.from_real(phi).scaled(complex(math.cos(theta), math.sin(theta)))
    distance = spectral.norm_sobolev(spectral.translate(u, shift) - target, index)
    return distance, _wrap(shift, grid.half_period), theta


def default_time_step(u0: AnyField, equation: Equation) -> float:
    """Step limited by the nonlinear rate; the linear part is integrated exactly."""
    size = max(u0.max_abs(), 1e-12)
    if equation == Equation.FKDV:
        k_max = math.pi * u0.grid.n_points / (2.0 * u0.grid.half_period)
        return min(MAX_DEFAULT_STEP, 0.5 / (2.0 * k_max * size))
    return min(MAX_DEFAULT_STEP, 0.5 / size)


def _relative(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), 1e-300) if reference != 0 else abs(value)


class EvolutionService:
    """Evolution runs, exactness tests and orbital-stability experiments."""

    def __init__(self):
        self.analyzer = SpectralAnalyzer()
        self.logger = logging.getLogger(__name__)

    def evolve(self, u0: AnyField, config: EvolutionConfig) -> Iterator[Tuple[float, AnyField]]:
        """Yield (t, u) at t = 0, every record_every steps and at t_final."""
        spectral.check_grid(u0, config.grid)
        u0 = _as_state(u0, config.equation)
        if config.dealias:
            u0 = spectral.dealias(u0)
        stepper = _IntegratingFactorRK4(config.grid, config.alpha, config.equation, config.dt, config.dealias)
        reference = u0.max_abs()
        coeffs = u0.coeffs.copy()
        n_steps = config.n_steps
        yield 0.0, u0
        for step in range(1, n_steps + 1):
            coeffs = stepper.step(coeffs)
            if step % config.record_every == 0 or step == n_steps:
                u = _field_from(coeffs, config.grid, config.equation)
                _check_finite(u, reference)
                yield step * config.dt, u
            elif not np.all(np.isfinite(coeffs)):
                raise BlowUpError(f"non-finite coefficients at t = {step * config.dt:.6g}")

    def final_state(self, u0: AnyField, config: EvolutionConfig) -> AnyField:
        state = u0
        for _, state in self.evolve(u0, config):
            pass
        return state

    def reversibility_error(self, u0: AnyField, t: float, config: EvolutionConfig) -> float:
        """L^2 error after integrating to t and back with the negated step."""
        forward = config.model_copy(update={"t_final": t})
        start = spectral.dealias(_as_state(u0, config.equation)) if config.dealias else _as_state(u0, config.equation)
        middle = self.final_state(start, forward)
        stepper = _IntegratingFactorRK4(config.grid, config.alpha, config.equation, -config.dt, config.dealias)
        coeffs = middle.coeffs.copy()
        for _ in range(forward.n_steps):
            coeffs = stepper.step(coeffs)
        back = _field_from(coeffs, config.grid, config.equation)
        return (back - start).l2_norm()

    def exact_wave(self, profile: WaveProfile, t: float, equation: Equation) -> AnyField:
        """phi(x - omega t) for fKdV, e^{i omega t} phi for fNLS."""
        if equation == Equation.FKDV:
            return spectral.translate(profile.phi, -profile.omega * t)
        return ComplexField.from_real(profile.phi).scaled(complex(math.cos(profile.omega * t), math.sin(profile.omega * t)))

    def wave_exactness_error(self, profile: WaveProfile, config: EvolutionConfig) -> float:
        """L^inf distance between the evolved wave and its exact traveling/standing form at t_final."""
        if config.equation == Equation.FNLS and profile.a_param != 0.0:
            raise ValueError(f"fNLS standing waves need a = 0, got a = {profile.a_param}")
        final = self.final_state(profile.phi, config)
        exact = self.exact_wave(profile, config.n_steps * config.dt, config.equation)
        return float(np.max(np.abs(final.values - exact.values)))

    def perturbation_library(
        self, profile: WaveProfile, kind: PerturbationKind, seed: int, equation: Equation = Equation.FKDV
    ) -> AnyField:
        """Unit H^{alpha/2} perturbation: band-limited random (orthogonal to phi, phi') or along the lowest L+ eigenvector."""
        phi = profile.phi
        grid = phi.grid
        index = SobolevIndex(s=profile.alpha / 2.0)
        if kind == PerturbationKind.DIRECTED:
            _, vectors = self.analyzer.sym_spectrum(self.analyzer.assemble_lplus(profile))
            chi = vectors[0]
            if spectral.inner_l2(chi, phi) < 0:
                chi = chi.scaled(-1.0)
            direction: AnyField = chi if equation == Equation.FKDV else ComplexField.from_real(chi)
            return direction.scaled(1.0 / spectral.norm_sobolev(direction, index))

        rng = np.random.default_rng(seed)
        floor = 1e-12 * max(phi.l2_norm(), 1.0)
        basis = [b for b in (phi, spectral.derivative(phi)) if b.l2_norm() > floor]

        def draw() -> np.ndarray:
            x = grid.nodes
            band = max(1, grid.n_points // PERTURBATION_BAND)
            values = rng.normal() * np.ones(grid.n_points)
            for k in range(1, band + 1):
                decay = 1.0 / (1.0 + k * k)
                values += decay * (rng.normal() * np.cos(math.pi * k * x / grid.half_period) + rng.normal() * np.sin(math.pi * k * x / grid.half_period))
            field = RealField.from_values(grid, values)
            for b in basis:
                norm_sq = spectral.inner_l2(b, b)
                if norm_sq > 0.0:
                    field = field - b.scaled(spectral.inner_l2(field, b) / norm_sq)
            return field.values

        if equation == Equation.FKDV:
            perturbation: AnyField = RealField.from_values(grid, draw())
        else:
            real_part = draw()
            perturbation = ComplexField.from_values(grid, real_part + 1j * draw())
        return perturbation.scaled(1.0 / spectral.norm_sobolev(perturbation, index))

    def run_experiment(
        self,
        profile: WaveProfile,
        perturbation: AnyField,
        config: EvolutionConfig,
        delta: Optional[float] = None,
        label: str = "",
    ) -> StabilityRunReport:
        """Evolve u0 = phi + perturbation and track the modulated distance to the wave orbit."""
        index = SobolevIndex(s=profile.alpha / 2.0)
        delta = spectral.norm_sobolev(perturbation, index) if delta is None else delta
        if config.equation == Equation.FKDV:
            u0 = profile.phi + _as_state(perturbation, Equation.FKDV)
        else:
            u0 = ComplexField.from_real(profile.phi) + _as_state(perturbation, Equation.FNLS)

        report = StabilityRunReport(profile_ref=profile.profile_id, equation=config.equation, perturbation_size=delta, label=label)
        initial: Optional[ConservedTriple] = None
        try:
            for t, u in self.evolve(u0, config):
                triple = conserved(u, profile.alpha)
                if config.equation == Equation.FKDV:
                    distance, shift = orbital_distance_kdv(u, profile.phi, index)
                    phase = 0.0
                else:
                    distance, shift, phase = orbital_distance_nls(u, profile.phi, index)
                if initial is None:
                    initial = triple
                self._record(report, t, triple, initial, distance, shift, phase)
        except BlowUpError as e:
            report.blow_up = True
            self._finish(report)
            self.logger.error(f"Run {label or profile.profile_id} blew up: {str(e)}")
            raise BlowUpError(str(e), partial_report=report) from e

        self._finish(report)
        self.logger.info(
            f"Run {label or profile.profile_id} finished: t={report.times[-1]:.6g}, max distance {report.max_distance:.3e}, "
            f"ratio {report.verdict_ratio:.3e}"
        )
        return report

    @staticmethod
    def _record(report, t, triple, initial, distance, shift, phase) -> None:
        report.times.append(float(t))
        report.conserved.append(triple)
        report.orbital_distance.append(float(distance))
        report.shifts.append(float(shift))
        report.phases.append(float(phase))
        report.drift.momentum_p.append(_relative(triple.momentum_p, initial.momentum_p))
        report.drift.hamiltonian_h.append(_relative(triple.hamiltonian_h, initial.hamiltonian_h))
        mass_gap = abs(triple.mass_m - initial.mass_m)
        report.drift.mass_m.append(mass_gap / abs(initial.mass_m) if initial.mass_m != 0 else mass_gap)

    @staticmethod
    def _finish(report: StabilityRunReport) -> None:
        if report.perturbation_size > 0:
            report.verdict_ratio = report.max_distance / report.perturbation_size
        else:
            report.verdict_ratio = report.max_distance
