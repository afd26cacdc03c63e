"""Periodic solutions of Euler-Lagrange systems with anisotropic G-function growth.

Discretised action functional, hypothesis checkers for the worked planar
example, and numerical mountain-pass / constrained-minimisation solvers.
"""
__version__ = "0.1.0"

from .discretization import DiscreteFunction, Grid, make_grid  # noqa: E402
from .functional import action, action_gradient  # noqa: E402
from .lagrangian import Lagrangian, example5, example5_f0, problem  # noqa: E402

__all__ = ["DiscreteFunction", "Grid", "make_grid", "action", "action_gradient",
           "Lagrangian", "example5", "example5_f0", "problem", "__version__"]
