"""Periodic lattice, discrete Fourier pair, norms, interpolation and initial data."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.fft as sfft
from scipy.interpolate import PchipInterpolator


class GridError(ValueError):
    pass


class ResolutionError(GridError):
    pass


class OutOfDomainError(GridError):
    pass


def fft_workers() -> int:
    return int(os.environ.get("FRACBURGERS_THREADS", "1") or 1)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on [-L, L)^dim with n points per axis."""

    dim: int
    half_width: float
    n: int

    def __post_init__(self):
        if self.dim < 1:
            raise GridError("dim must be >= 1")
        if self.n < 8 or self.n & (self.n - 1):
            raise GridError(f"n must be a power of two >= 8, got {self.n}")
        if not self.half_width > 0:
            raise GridError("half_width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coords))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Broadcastable per-axis frequencies xi_k = pi k / L (numpy FFT ordering)."""
        k = 2 * np.pi * sfft.fftfreq(self.n, d=self.spacing)
        out = []
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumber_norm(self) -> np.ndarray:
        return np.sqrt(sum(k * k for k in self.wavenumbers))

    @cached_property
    def odd_derivative_mask(self) -> np.ndarray:
        """Zero on the Nyquist planes, where i*xi has no real-valued counterpart."""
        mask = np.ones(self.shape)
        for k in self.wavenumbers:
            mask = mask * (np.abs(k) < np.pi / self.spacing - 1e-12)
        return mask

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule: keep |k_j| <= n/3 on every axis."""
        mask = np.ones(self.shape)
        cut = (self.n // 3) * np.pi / self.half_width
        for k in self.wavenumbers:
            mask = mask * (np.abs(k) <= cut + 1e-12)
        return mask

    def index_of(self, x) -> np.ndarray:
        return (np.asarray(x, float) + self.half_width) / self.spacing


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a grid, stamped with the time they represent.

    ``mask`` (optional) marks valid samples; masked samples hold 0.
    """

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    mask: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("field values must be finite")
        object.__setattr__(self, "values", v)

    def with_values(self, values, time=None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: Grid
    coeffs: np.ndarray


def to_spectral(f: Field) -> Spectrum:
    return Spectrum(f.grid, sfft.fftn(f.values, workers=fft_workers()))


def from_spectral(s: Spectrum, time: float = 0.0) -> Field:
    if s.coeffs.shape != s.grid.shape:
        raise GridError("spectrum size does not match its grid")
    return Field(s.grid, sfft.ifftn(s.coeffs, workers=fft_workers()).real, time)


def lp_norm(f: Field, p: float) -> float:
    """Rectangle-rule L^p norm; masked samples are skipped."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    v = np.abs(f.values if f.mask is None else f.values[f.mask])
    if v.size == 0:
        return 0.0
    if np.isinf(p):
        return float(v.max())
    if p == 1:
        return float(v.sum() * f.grid.cell_volume)
    vmax = v.max()
    if vmax == 0:
        return 0.0
    return float(vmax * (np.sum((v / vmax) ** p) * f.grid.cell_volume) ** (1.0 / p))


def _pchip_axis(x, y, xq, axis):
    # denormal slopes in far tails overflow scipy's harmonic mean harmlessly
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        return PchipInterpolator(x, y, axis=axis, extrapolate=False)(xq)


def _wrap(f: Field, pts):
    L = f.grid.half_width
    return np.mod(pts + L, 2 * L) - L


def interpolate(f: Field, x, periodic: bool = False):
    """Monotone piecewise-cubic (tensor-product PCHIP) value of f at points x.

    ``x`` is an array of shape (..., dim) (or (...) for dim 1). Points outside
    [-L, L)^dim raise OutOfDomainError unless ``periodic`` is set.
    """
    g = f.grid
    x = np.asarray(x, dtype=float)
    pts = x[..., None] if (g.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1)) else x
    if periodic:
        pts = _wrap(f, pts)
    elif np.any(pts < -g.half_width) or np.any(pts >= g.half_width):
        raise OutOfDomainError("interpolation point outside the computational box")
    # one ghost node closes the period so [x_{n-1}, L) is covered
    axis = np.append(g.axis, g.half_width)
    vals = f.values
    for ax in range(g.dim):
        vals = np.concatenate([vals, np.take(vals, [0], axis=ax)], axis=ax)
    flat = pts.reshape(-1, g.dim)
    if g.dim == 1:
        out = _pchip_axis(axis, vals, flat[:, 0], 0)
    else:
        out = np.empty(len(flat))
        for i, p in enumerate(flat):
            v = vals
            for ax in range(g.dim):
                v = _pchip_axis(axis, v, p[ax], 0)
            out[i] = v
    shape = pts.shape[:-1]
    return out.reshape(shape)


def interpolate_tensor(f: Field, axes_points: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """PCHIP values of f on a tensor grid; returns (values, valid mask)."""
    g = f.grid
    v = f.values
    valid = []
    for ax, xq in enumerate(axes_points):
        inside = (xq >= g.axis[0]) & (xq <= g.axis[-1])
        valid.append(inside)
        v = _pchip_axis(g.axis, v, np.where(inside, xq, g.axis[0]), ax)
    mask = np.ones(v.shape, dtype=bool)
    for ax, inside in enumerate(valid):
        shape = [1] * g.dim
        shape[ax] = len(inside)
        mask = mask & inside.reshape(shape)
    return np.where(mask, v, 0.0), mask


def rescale_star(f: Field, alpha: float, t: float | None = None) -> Field:
    """g(x) = t^(d/alpha) f(t^(1/alpha) x) on the same grid, t = f.time by default.

    Sample points that leave the box are masked (mask False, value 0).
    """
    t = f.time if t is None else t
    if not t > 0:
        raise GridError("rescaling needs t > 0")
    g = f.grid
    if t == 1.0:
        return Field(g, f.values.copy(), f.time)
    s = t ** (1.0 / alpha)
    vals, mask = interpolate_tensor(f, [s * g.axis] * g.dim)
    vals = t ** (g.dim / alpha) * vals
    return Field(g, vals, f.time, None if mask.all() else mask)


@dataclass(frozen=True)
class InitialDatumSpec:
    """Nonnegative initial datum with prescribed mass M.

    kinds: gaussian_bump (width = standard deviation), box_indicator
    (half-open box of half side width), heavy_tail (1/(1+|x/width|^(d+gamma))),
    smooth_bump (exp(-1/(1-|x/width|^2)) inside the ball of radius width), samples.
    """

    kind: str = "gaussian_bump"
    mass: float = 1.0
    width: float = 1.0
    center: tuple[float, ...] = ()
    gamma: float | None = None
    samples: np.ndarray | None = field(default=None, compare=False)

    KINDS = ("gaussian_bump", "box_indicator", "heavy_tail", "smooth_bump", "samples")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise GridError(f"unknown datum kind {self.kind!r}; expected one of {self.KINDS}")
        if not self.mass > 0:
            raise GridError("datum mass must be positive")
        if not self.width > 0:
            raise GridError("datum width must be positive")
        if self.kind == "heavy_tail" and (self.gamma is None or not self.gamma > 0):
            raise GridError("heavy_tail datum needs a tail exponent gamma > 0")
        if self.kind == "samples" and self.samples is None:
            raise GridError("samples datum needs a samples array")


def make_u0(spec: InitialDatumSpec, grid: Grid) -> Field:
    h = grid.spacing
    if spec.kind != "samples" and spec.width < 4 * h:
        raise ResolutionError(f"datum width {spec.width} is below 4 grid cells ({4 * h})")
    center = np.asarray(spec.center or (0.0,) * grid.dim, dtype=float)
    shifted = [c - x0 for c, x0 in zip(grid.coords, center)]
    r2 = sum(s * s for s in shifted)
    if spec.kind == "gaussian_bump":
        v = np.exp(-0.5 * r2 / spec.width ** 2)
    elif spec.kind == "box_indicator":
        inside = np.ones(grid.shape, dtype=bool)
        for s in shifted:
            inside &= (s >= -spec.width - 1e-9 * h) & (s < spec.width - 1e-9 * h)
        v = inside.astype(float)
    elif spec.kind == "heavy_tail":
        v = 1.0 / (1.0 + (np.sqrt(r2) / spec.width) ** (grid.dim + spec.gamma))
    elif spec.kind == "smooth_bump":
        z = r2 / spec.width ** 2
        with np.errstate(divide="ignore", over="ignore"):
            v = np.where(z < 1.0, np.exp(-1.0 / np.maximum(1.0 - z, 1e-300)), 0.0)
    else:
        v = np.asarray(spec.samples, dtype=float)
        if v.shape != grid.shape or np.any(v < 0):
            raise GridError("samples must be nonnegative and match the grid shape")
    mass = v.sum() * grid.cell_volume
    if mass <= 0:
        raise ResolutionError("datum has no mass on this grid")
    return Field(grid, v * (spec.mass / mass), 0.0)
