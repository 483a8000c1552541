"""Free fractional heat evolution P_t, its rescaled version P*_t, and a free-space check."""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from . import kernel
from .grid import Field, Spectrum, from_spectral, rescale_star, to_spectral


def multiplier(grid, t: float, alpha: float) -> np.ndarray:
    return np.exp(-t * grid.wavenumber_norm ** alpha)


def apply(f: Field, t: float, alpha: float) -> Field:
    """P_t f on the periodic grid via the multiplier exp(-t |xi|^alpha)."""
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    if t == 0:
        return Field(f.grid, f.values.copy(), f.time)
    spec = to_spectral(f)
    return from_spectral(Spectrum(f.grid, spec.coeffs * multiplier(f.grid, t, alpha)), f.time + t)


def apply_star(u0: Field, t: float, alpha: float) -> Field:
    """(P*_t u0)(x) = t^(d/alpha) (P_t u0)(t^(1/alpha) x)."""
    if not t > 0:
        raise ValueError("P*_t needs t > 0")
    evolved = apply(u0, t, alpha)
    return rescale_star(evolved, alpha, t=t)


def apply_direct(f: Field, t: float, alpha: float) -> Field:
    """Free-space rectangle-rule convolution with p(t, .), no periodic wrap.

    Exists only to measure the periodisation error of :func:`apply`.
    """
    if not t > 0:
        raise ValueError("direct evolution needs t > 0")
    g = f.grid
    params = kernel.StabilityParams(alpha, g.dim)
    offs = g.spacing * np.arange(-(g.n - 1), g.n)
    mesh = np.meshgrid(*([offs] * g.dim), indexing="ij")
    r = np.sqrt(sum(m * m for m in mesh))
    ker = kernel.density(params, t, r if g.dim == 1 else np.stack(mesh, -1))
    full = fftconvolve(f.values, ker, mode="full")
    # kernel index (m - j) + n - 1 pairs target m with source j
    window = tuple(slice(g.n - 1, 2 * g.n - 1) for _ in range(g.dim))
    return Field(g, full[window] * g.cell_volume, f.time + t)
