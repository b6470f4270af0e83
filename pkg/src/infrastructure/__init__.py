"""File storage, worker pool and reference solvers."""
