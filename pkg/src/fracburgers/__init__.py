"""Numerical lab for the fractal Burgers equation.

u_t - Delta^{alpha/2} u + b . grad(u^{q+1}) = 0 on R^d, solved on a periodic
box, with checks comparing u(t) against the free evolution P_t u0.
"""

from .grid import Field, Grid, InitialDatumSpec, lp_norm, make_u0, rescale_star
from .kernel import StabilityParams, density, gradient
from .semigroup import apply, apply_direct, apply_star
from .solver import SolverConfig, Trajectory, critical_exponent, picard_iterate, solve, step

__version__ = "0.1.0"

__all__ = [
    "Field", "Grid", "InitialDatumSpec", "SolverConfig", "StabilityParams", "Trajectory",
    "apply", "apply_direct", "apply_star", "critical_exponent", "density", "gradient",
    "lp_norm", "make_u0", "picard_iterate", "rescale_star", "solve", "step",
]
