"""Periodic Fourier discretization on [-T, T].

Coefficients use the normalization f(k) = (1/sqrt(2T)) * integral f e^{-i pi k x/T} dx,
so sum |f(k)|^2 is the L^2 norm squared and the rectangle rule (2T/N) * sum f_j g_j
is the exact inner product for band-limited data.
"""

import logging
import math
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .entities.field import AnyField, ComplexField, RealField, like_coeffs
from .entities.grid import Grid, SobolevIndex
from .exceptions import GridMismatchError

logger = logging.getLogger(__name__)

DEALIAS_FRACTION = 1.0 / 3.0


def make_grid(n_points: int, half_period: float) -> Grid:
    return Grid(n_points=n_points, half_period=half_period)


def check_grid(field: AnyField, grid: Optional[Grid]) -> Grid:
    if grid is not None and grid != field.grid:
        raise GridMismatchError(f"field lives on {field.grid}, expected {grid}")
    return field.grid


def check_same_grid(f: AnyField, g: AnyField) -> Grid:
    if f.grid != g.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {g.grid}")
    return f.grid


def transform(field: AnyField) -> np.ndarray:
    return field.grid.forward(field.values)


def inverse_transform(coeffs: np.ndarray, grid: Grid, real: Optional[bool] = None) -> AnyField:
    """Field from coefficients; real output when the coefficients are conjugate-symmetric."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (grid.n_points,):
        raise GridMismatchError(f"expected {grid.n_points} coefficients, got {coeffs.shape}")
    if real is None:
        mirrored = np.conj(coeffs[grid.mirror_index()])
        scale = max(float(np.max(np.abs(coeffs))), 1e-300)
        real = bool(np.max(np.abs(coeffs - mirrored)) <= 1e-12 * scale)
    if real:
        return RealField.from_coeffs(grid, coeffs)
    return ComplexField.from_coeffs(grid, coeffs)


# --- Fourier multipliers -------------------------------------------------------

def symbol(grid: Grid, alpha: float) -> np.ndarray:
    """(pi |k| / T)^alpha per slot; k = 0 maps to 0, Nyquist kept."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return np.abs(grid.frequencies) ** alpha


def derivative_multiplier(grid: Grid) -> np.ndarray:
    """i pi k / T per slot with the Nyquist slot zeroed."""
    multiplier = 1j * grid.frequencies
    multiplier[grid.nyquist_slot] = 0.0
    return multiplier


def dealias_mask(grid: Grid) -> np.ndarray:
    return np.abs(grid.wavenumbers) <= grid.n_points * DEALIAS_FRACTION


def apply_symbol(field: AnyField, alpha: float, grid: Optional[Grid] = None) -> AnyField:
    grid = check_grid(field, grid)
    return like_coeffs(field, symbol(grid, alpha) * field.coeffs)


def derivative(field: AnyField, grid: Optional[Grid] = None) -> AnyField:
    grid = check_grid(field, grid)
    return like_coeffs(field, derivative_multiplier(grid) * field.coeffs)


def dealias(field: AnyField) -> AnyField:
    return like_coeffs(field, np.where(dealias_mask(field.grid), field.coeffs, 0.0))


# --- quadrature and norms ----------------------------------------------------------

def integral(field: AnyField) -> complex:
    value = field.grid.spacing * np.sum(field.values)
    return float(value.real) if isinstance(field, RealField) else complex(value)


def inner_l2(f: AnyField, g: AnyField) -> float:
    """Real part of (2T/N) * sum f_j conj(g_j)."""
    grid = check_same_grid(f, g)
    return float(np.real(grid.spacing * np.sum(f.values * np.conj(g.values))))


def inner_sobolev(f: AnyField, g: AnyField, s: Union[SobolevIndex, float]) -> complex:
    grid = check_same_grid(f, g)
    index = s if isinstance(s, SobolevIndex) else SobolevIndex(s=s)
    return complex(np.sum(index.weights(grid) * f.coeffs * np.conj(g.coeffs)))


def norm_sobolev(f: AnyField, s: Union[SobolevIndex, float]) -> float:
    index = s if isinstance(s, SobolevIndex) else SobolevIndex(s=s)
    return float(np.sqrt(np.sum(index.weights(f.grid) * np.abs(f.coeffs) ** 2)))


def seminorm_sobolev(f: AnyField, beta: float) -> float:
    """||Lambda^beta f||_{L^2}."""
    return float(np.sqrt(np.sum(symbol(f.grid, 2.0 * beta) * np.abs(f.coeffs) ** 2)))


# --- translations and interpolation -------------------------------------------------

def shift_factors(grid: Grid, shift: float) -> np.ndarray:
    factors = np.exp(1j * grid.frequencies * shift)
    # the Nyquist mode has no partner; its real interpolant is a cosine
    factors[grid.nyquist_slot] = math.cos(grid.frequencies[grid.nyquist_slot] * shift)
    return factors


def translate(field: AnyField, shift: float) -> AnyField:
    """Exact spectral translation x -> f(x + shift)."""
    return like_coeffs(field, field.coeffs * shift_factors(field.grid, shift))


def evaluate(field: AnyField, x) -> np.ndarray:
    """Trigonometric interpolant of the field at arbitrary points."""
    grid = field.grid
    points = np.atleast_1d(np.asarray(x, dtype=float))
    phases = np.exp(1j * np.outer(points, grid.frequencies))
    nyq = grid.nyquist_slot
    phases[:, nyq] = np.cos(points * grid.frequencies[nyq])
    result = phases @ field.coeffs / math.sqrt(grid.length)
    if isinstance(field, RealField):
        result = result.real
    return result if np.ndim(x) else result[0]


def symmetrize(field: AnyField) -> AnyField:
    """Even part (f(x) + f(-x)) / 2 on the grid."""
    mirrored = field.values[field.grid.mirror_index()]
    values = 0.5 * (field.values + mirrored)
    if isinstance(field, RealField):
        return RealField.from_values(field.grid, values)
    return ComplexField.from_values(field.grid, values)


def is_bell_shaped(field: RealField, slack: float = 1e-9) -> bool:
    """Even about 0 and non-increasing in |x| (up to absolute slack)."""
    values = field.values
    n = field.n_points
    centre = n // 2
    if np.max(np.abs(values - values[field.grid.mirror_index()])) > slack:
        return False
    right = values[centre:]
    outward = np.append(right, values[0])
    return bool(np.all(np.diff(outward) <= slack))


# --- rearrangement -------------------------------------------------------------------

def _outward_order(n: int) -> np.ndarray:
    centre = n // 2
    order = [centre]
    for step in range(1, n):
        if centre + step < n:
            order.append(centre + step)
        if centre - step >= 0:
            order.append(centre - step)
        if len(order) == n:
            break
    return np.asarray(order)


def rearrange_values(values) -> np.ndarray:
    """Largest value at the centre slot, then alternately right and left outward."""
    values = np.asarray(values, dtype=float)
    result = np.empty_like(values)
    result[_outward_order(values.size)] = np.sort(values)[::-1]
    return result


def decreasing_rearrangement(field: RealField, beta: Optional[float] = None) -> RealField:
    """Discrete symmetric-decreasing rearrangement about x = 0.

    With `beta` given, an increase of the H^beta seminorm is logged as a diagnostic.
    """
    rearranged = RealField.from_values(field.grid, rearrange_values(field.values))
    if beta is not None:
        gap = rearrangement_seminorm_gap(field, beta, rearranged)
        if gap > 0:
            logger.warning(f"Rearrangement increased the H^{beta} seminorm by {gap:.3e}")
    return rearranged


def rearrangement_seminorm_gap(field: RealField, beta: float, rearranged: Optional[RealField] = None) -> float:
    """||Lambda^beta f*|| - ||Lambda^beta f||; non-positive when the Polya-Szego bound holds."""
    rearranged = rearranged if rearranged is not None else decreasing_rearrangement(field)
    return seminorm_sobolev(rearranged, beta) - seminorm_sobolev(field, beta)


# --- Fourier-basis matrices --------------------------------------------------------------

def multiplication_matrix(potential: AnyField) -> np.ndarray:
    """Matrix of pointwise multiplication by `potential` acting on coefficient vectors.

    In FFT slot order it is the circulant f((n - m) mod N) / sqrt(2T); the identity is
    exact on the grid, aliasing included.
    """
    grid = potential.grid
    return scipy.linalg.circulant(potential.coeffs) / math.sqrt(grid.length)


def coefficient_transform_matrix(grid: Grid) -> np.ndarray:
    """Matrix U with U @ values == grid.forward(values)."""
    return np.stack([grid.forward(column) for column in np.eye(grid.n_points)], axis=1)


def symbol_diagonal(grid: Grid, alpha: float) -> np.ndarray:
    return np.diag(symbol(grid, alpha).astype(complex))


def derivative_diagonal(grid: Grid) -> np.ndarray:
    return np.diag(derivative_multiplier(grid))
