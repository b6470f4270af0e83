import logging
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_bvp

from ...domain import spectral
from ...domain.entities import Grid, RealField
from ...domain.exceptions import ConvergenceError

logger = logging.getLogger(__name__)


class CollocationOracle:
    """Independent solver for alpha = 2, where the profile equation is the ODE phi'' = omega phi - phi^2 + a.

    Solves on the half cell [0, T] with phi'(0) = phi'(T) = 0 and int_0^T phi^2 = lambda/2,
    treating omega as an unknown parameter.
    """

    def __init__(self, refinement: int = 4, tol: float = 1e-10, max_nodes: int = 200000):
        self.refinement = refinement
        self.tol = tol
        self.max_nodes = max_nodes
        self.logger = logging.getLogger(__name__)

    def solve(
        self,
        lam: float,
        a: float,
        grid: Grid,
        guess: RealField,
        omega_guess: float,
    ) -> Tuple[RealField, float]:
        """Returns the oracle profile sampled on `grid` and its omega."""
        half_period = grid.half_period
        mesh = np.linspace(0.0, half_period, self.refinement * grid.n_points // 2 + 1)
        phi0 = np.asarray(spectral.evaluate(guess, mesh), dtype=float)
        dphi0 = np.asarray(spectral.evaluate(spectral.derivative(guess), mesh), dtype=float)
        spacing = np.diff(mesh)
        squares = phi0 ** 2
        partial = np.concatenate([[0.0], np.cumsum(0.5 * (squares[1:] + squares[:-1]) * spacing)])
        y0 = np.vstack([phi0, dphi0, partial])

        def rhs(x, y, p):
            omega = p[0]
            return np.vstack([y[1], omega * y[0] - y[0] ** 2 + a, y[0] ** 2])

        def bc(ya, yb, p):
            return np.array([ya[1], yb[1], ya[2], yb[2] - 0.5 * lam])

        result = solve_bvp(rhs, bc, mesh, y0, p=[omega_guess], tol=self.tol, max_nodes=self.max_nodes)
        if result.status != 0:
            raise ConvergenceError(f"collocation oracle failed: {result.message}")

        omega = float(result.p[0])
        values = result.sol(np.abs(grid.nodes))[0]
        self.logger.info(f"Collocation oracle converged on {result.x.size} nodes, omega={omega:.12g}")
        return RealField.from_values(grid, values), omega

