"""Independent reference solvers."""

from .ode_oracle import CollocationOracle

__all__ = ["CollocationOracle"]
