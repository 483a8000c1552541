"""Checks that need no solver trajectory: kernel facts and the r-integral identities."""

from __future__ import annotations

import mpmath
import numpy as np
from scipy import integrate, special

from .. import kernel
from ..grid import Field, Grid, interpolate
from ..kernel import StabilityParams
from ..semigroup import apply
from . import quadrature as quad
from .report import CheckResult

REGRESSION_C_HALF = 2.5742271323983577  # c(v=0.5) at alpha=1.5, beta=0.5


def lemma_constant_mp(alpha: float, beta: float, dps: int = 30) -> float:
    """C2 by direct tanh-sinh quadrature; y = s^{(1-beta)/alpha} removes the r=0 singularity."""
    with mpmath.workdps(dps):
        a, b = mpmath.mpf(alpha), mpmath.mpf(beta)
        k = a / (1 - b)
        val = k / a * mpmath.quad(lambda y: (1 - y ** k) ** (-1 / a), [0, 0.5, 0.9, 1])
        return float(val)


def _inner_integral(g: Field, X, sigma, v, wv):
    """int p(1,v) g(X - sigma v) dv with g set to zero outside the box."""
    L = g.grid.half_width
    pts = X[:, None] - sigma * v[None, :]
    inside = (pts >= -L) & (pts < L)
    vals = np.zeros(pts.shape)
    if inside.any():
        vals[inside] = interpolate(g, pts[inside], periodic=True)
    return vals @ wv


def check_lemma_identity(beta: float, f: Field, t: float, cfg, x_samples=None,
                         n_r: int = 24, n_v: int = 400, rtol: float = 1e-3,
                         c2_tol: float = 1e-10, floor: float = 1e-8) -> CheckResult:
    """int_0^1 int h_beta(r,x,w) (P*_{r^a t} f)(w) dw dr = C2 (P*_t f)(x), d = 1.

    With y = r t^{1/a} w and y = X - sigma v (X = t^{1/a} x, sigma^a = t(1-r^a))
    the inner integral becomes t^{d/a} int p(1,v) (P_{r^a t} f)(X - sigma v) dv.
    The r-integral uses Gauss-Jacobi in s = r^a; the v-integral a mapped
    Gauss-Legendre rule on the half line, mirrored.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if not t > 0:
        raise ValueError("t must be positive")
    params = cfg.params if hasattr(cfg, "params") else cfg
    a = params.alpha
    if f.grid.dim != 1:
        raise NotImplementedError("lemma identity is implemented for d = 1")
    if np.any(f.values < 0):
        raise ValueError("f must be nonnegative")
    C2 = quad.lemma_constant(a, beta)
    C2_mp = lemma_constant_mp(a, beta)
    c2_err = abs(C2 - C2_mp) / C2
    x = np.linspace(-3.0, 3.0, 10) if x_samples is None else np.asarray(x_samples, float)
    X = t ** (1.0 / a) * x
    rhs_field = apply(f, t, a)
    top = float(rhs_field.values.max())
    rhs = t ** (1.0 / a) * interpolate(rhs_field, X) if top > 0 else np.zeros_like(x)
    r, wr = quad.lemma_r_rule(a, beta, n_r)
    vh, wh = quad.half_line_map(n_v)
    v = np.concatenate([-vh[::-1], vh])
    pv = kernel.density(params, 1.0, np.abs(v))
    wv = np.concatenate([wh[::-1], wh]) * pv
    lhs = np.zeros_like(x)
    for rj, wj in zip(r, wr):
        g = apply(f, rj ** a * t, a)
        sigma = (t * (1.0 - rj ** a)) ** (1.0 / a)
        lhs += wj * t ** (1.0 / a) * _inner_integral(g, X, sigma, v, wv)
    keep = rhs > floor * max(top, 1e-300) * t ** (1.0 / a)
    if top == 0:
        rel = 0.0 if np.all(lhs == 0) else np.inf
    else:
        rel = float(np.max(np.abs(lhs[keep] / (C2 * rhs[keep]) - 1.0))) if keep.any() else np.inf
    ok = rel < rtol and c2_err < c2_tol
    measured = {"max_rel_error": rel, "C2_closed": C2, "C2_quadrature": C2_mp, "C2_rel_error": c2_err,
                "lhs": lhs.tolist(), "rhs_times_C2": (C2 * rhs).tolist()}
    return CheckResult("lemma-identity", {"alpha": a, "beta": beta, "t": t, "x": x.tolist(),
                                          "n_r": n_r, "n_v": n_v},
                       measured, {"rel_tol": rtol, "C2_tol": c2_tol}, ok,
                       "trivial" if top == 0 and ok else "",
                       tables={"lemma": (["x", "lhs", "C2_rhs"], list(zip(x, lhs, C2 * rhs)))})


def convolution_ratio(v: float, alpha: float, beta: float, n: int = 16) -> float:
    """c(v) = LHS / [v^{-beta} (1-v)^{-1/alpha}]."""
    lhs = quad.convolution_integral(v, alpha, beta, n)
    return lhs / (v ** (-beta) * (1.0 - v) ** (-1.0 / alpha))


def check_convolution_inequality(beta: float, alpha: float, v_list=(0.1, 0.5, 0.9, 0.99),
                                 n: int = 16, max_drift: float = 0.05) -> CheckResult:
    """Empirical constant of int_v^1 r^-b (1-r^a)^-1/a (r^a-v^a)^-1/a dr <~ v^-b (1-v)^-1/a."""
    v_list = [float(v) for v in v_list]
    if any(not 0.0 < v < 1.0 for v in v_list):
        raise ValueError("v values must lie in (0, 1)")
    c = [convolution_ratio(v, alpha, beta, n) for v in v_list]
    c2 = [convolution_ratio(v, alpha, beta, 2 * n) for v in v_list]
    drift = [abs(b - a) / abs(a) for a, b in zip(c, c2)]
    if not np.all(np.isfinite(c2)):
        raise ArithmeticError("quadrature did not converge")
    ok = bool(np.all(np.isfinite(c)) and max(drift) < max_drift)
    return CheckResult("convolution-inequality", {"alpha": alpha, "beta": beta, "v": v_list, "n": n},
                       {"c": c, "c_refined": c2, "drift": drift, "c_max": max(c)},
                       {"drift_max": max_drift}, ok,
                       tables={"c_vs_v": (["v", "c", "c_refined"], list(zip(v_list, c, c2)))})


# ------------------------------------------------------------------- kernel

def _sweep(n):
    return np.geomspace(1e-3, 1e3, n)


def _envelope_constants(params, n, grad=False):
    t = _sweep(n)[:, None]
    r = _sweep(n)[None, :]
    if grad:
        val = np.abs(kernel.radial_derivative(params, t, r))
        env = kernel.gradient_envelope(params, t, r)
    else:
        val = kernel.radial_density(params, t, r)
        env = kernel.envelope(params, t, r)
    q = val / env
    return float(q.min()), float(q.max())


def _ck_rule_1d(params, s, t, x):
    w, ww = quad.line_rule([0.0, x], [s ** (1 / params.alpha), t ** (1 / params.alpha)], n=16)
    return ww @ (kernel.density(params, s, np.abs(w)) * kernel.density(params, t, np.abs(x - w)))


def _ck_rule_2d(params, s, t, x):
    a = params.alpha
    ax, wa = quad.line_rule([0.0, x[0]], [s ** (1 / a), t ** (1 / a)], n=8, span=2.0 ** 10)
    ay, wb = quad.line_rule([0.0, x[1]], [s ** (1 / a), t ** (1 / a)], n=8, span=2.0 ** 10)
    total = 0.0
    for yi, wy in zip(ay, wb):
        pts = np.stack([ax, np.full_like(ax, yi)], axis=-1)
        f = kernel.density(params, s, pts) * kernel.density(params, t, np.asarray(x) - pts)
        total += wy * (wa @ f)
    return total


def _normalization(params):
    """Mass of p(1, .) in a ball by composite Gauss-Legendre, plus the exact tail."""
    d = params.dim
    sphere = 2 * np.pi ** (d / 2) / special.gamma(d / 2)
    if params.alpha == 2.0:
        R = 60.0
        edges = np.concatenate([[0.0], np.geomspace(1e-3, R, 400)])
        tail = 0.0
    elif params.alpha == 1.0:
        R = 1e6
        edges = np.concatenate([[0.0], np.geomspace(1e-3, R, 800)])
        tail = float(special.betainc(0.5, d / 2, 1.0 / (1.0 + R * R)))
    else:
        prof = kernel.radial_profile(params)
        R = prof.r_switch
        edges = prof.r[prof.r < R]
        edges = np.append(edges, R)
        tail = prof.tail_mass(R)
    y, w = quad.gauss_legendre01(8)
    lo, hi = edges[:-1], edges[1:]
    nodes = (lo[:, None] + (hi - lo)[:, None] * y).ravel()
    wts = ((hi - lo)[:, None] * w).ravel()
    ball = sphere * (wts @ (kernel.unit_profile(params, nodes) * nodes ** (d - 1)))
    return float(ball + tail), float(R), float(tail)


def _direct_fourier(params, t, r):
    """p(t, r) straight from the Fourier integral at time t (no scaling used)."""
    a, d = params.alpha, params.dim
    kmax = (60.0 / t) ** (1 / a)
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=4000)
    if d == 1:
        val, _ = integrate.quad(lambda k: np.exp(-t * k ** a), 0.0, kmax, weight="cos", wvar=r,
                                **opts)
        return val / np.pi
    nu = d / 2 - 1
    f = lambda k: np.exp(-t * k ** a) * special.jv(nu, k * r) * k ** (d / 2)
    pts = np.linspace(0.0, kmax, 65)[1:-1]
    val, _ = integrate.quad(f, 0.0, kmax, points=pts, **opts)
    return val / ((2 * np.pi) ** (d / 2) * r ** nu)


def check_kernel(params: StabilityParams, tol: dict | None = None) -> list[CheckResult]:
    """One CheckResult per kernel invariant."""
    tol = {"closed_form": 1e-8, "normalization": 1e-6, "scaling": 1e-10, "envelope_drift": 0.01,
           "chapman_kolmogorov": 1e-4, **(tol or {})}
    a, d = params.alpha, params.dim
    base = {"alpha": a, "d": d}
    out = []

    if params.closed_form:
        t = np.geomspace(1e-2, 1e2, 10)[:, None]
        r = np.geomspace(1e-2, 1e2, 10)[None, :]
        if a == 2.0:
            ref = (4 * np.pi * t) ** (-d / 2) * np.exp(-r * r / (4 * t))
            dref = -r / (2 * t) * ref
        else:
            c = special.gamma((d + 1) / 2) * np.pi ** (-(d + 1) / 2)
            ref = c * t / (t * t + r * r) ** ((d + 1) / 2)
            dref = -(d + 1) * r / (t * t + r * r) * ref
        got = kernel.radial_density(params, t, r)
        dgot = kernel.radial_derivative(params, t, r)
        keep = ref > 1e-250
        err = float(max(np.max(np.abs(got[keep] / ref[keep] - 1)),
                        np.max(np.abs(dgot[keep] / dref[keep] - 1))))
        out.append(CheckResult("kernel-closed-form", {**base, "points": int(keep.sum())},
                               {"max_rel_error": err}, {"rel_tol": tol["closed_form"]},
                               err < tol["closed_form"]))

    mass, R, tail = _normalization(params)
    nerr = abs(mass - 1.0)
    out.append(CheckResult("kernel-normalization", {**base, "ball_radius": R},
                           {"integral": mass, "tail_mass": tail, "abs_error": nerr},
                           {"abs_tol": tol["normalization"]}, nerr < tol["normalization"]))

    serr = 0.0
    for tt in (1e-2, 0.3, 7.0, 1e2):
        for rho in (0.3, 1.0, 2.5):
            r = rho * tt ** (1 / a)
            lhs = float(kernel.radial_density(params, tt, r))
            serr = max(serr, abs(lhs / _direct_fourier(params, tt, r) - 1))
    out.append(CheckResult("kernel-scaling", base, {"max_rel_error": serr},
                           {"rel_tol": tol["scaling"]}, serr < tol["scaling"]))

    if a < 2.0:
        for name, grad in (("kernel-envelope", False), ("kernel-gradient-envelope", True)):
            c1, c2 = _envelope_constants(params, 61, grad)
            f1, f2 = _envelope_constants(params, 121, grad)
            drift = max(abs(f1 - c1) / c1, abs(f2 - c2) / c2)
            ok = bool(np.isfinite([c1, c2, f1, f2]).all() and c1 > 0 and drift < tol["envelope_drift"])
            out.append(CheckResult(name, {**base, "sweep": [1e-3, 1e3], "n": [61, 121]},
                                   {"c1": f1, "c2": f2, "drift": drift},
                                   {"drift_max": tol["envelope_drift"]}, ok))

    if a < 2.0:
        # drift-gradient constant sup |grad p| t^{1/a} / p, scale free in rho = r t^{-1/a}
        rho = np.concatenate([np.linspace(0, 10, 2001), np.geomspace(10, 1e4, 400)])
        v, dv = kernel.unit_profile(params, rho, derivative=True)
        rho2 = np.concatenate([np.linspace(0, 10, 4001), np.geomspace(10, 1e4, 800)])
        v2, dv2 = kernel.unit_profile(params, rho2, derivative=True)
        c, cf = float(np.max(np.abs(dv) / v)), float(np.max(np.abs(dv2) / v2))
        drift = abs(cf - c) / c
        out.append(CheckResult("kernel-drift-gradient", base,
                               {"c": cf, "drift": drift}, {"drift_max": tol["envelope_drift"]},
                               bool(np.isfinite(cf) and drift < tol["envelope_drift"])))

    ck = 0.0
    for s, tt, xx in ((0.3, 0.7, 0.5), (1.0, 2.0, 3.0), (0.05, 1.0, 10.0)):
        if d == 1:
            lhs = _ck_rule_1d(params, s, tt, xx)
            rhs = float(kernel.radial_density(params, s + tt, abs(xx)))
        else:
            xv = np.array([xx, 0.5 * xx])
            lhs = _ck_rule_2d(params, s, tt, xv)
            rhs = float(kernel.density(params, s + tt, xv))
        ck = max(ck, abs(lhs / rhs - 1.0))
    out.append(CheckResult("kernel-chapman-kolmogorov", base, {"max_rel_error": ck},
                           {"rel_tol": tol["chapman_kolmogorov"]}, ck < tol["chapman_kolmogorov"]))
    return out
