"""Quadrature rules for the singular r-integrals and the whole-line convolutions."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special


@lru_cache(maxsize=256)
def gauss_jacobi01(n: int, a: float, b: float):
    """Nodes/weights on [0, 1] for the weight s^a (1 - s)^b."""
    x, w = special.roots_jacobi(n, b, a)
    return 0.5 * (x + 1.0), w / 2.0 ** (a + b + 1.0)


@lru_cache(maxsize=64)
def gauss_legendre01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def lemma_constant(alpha: float, beta: float) -> float:
    """int_0^1 r^{-beta} (1 - r^alpha)^{-1/alpha} dr = (1/alpha) B((1-beta)/alpha, 1-1/alpha)."""
    return float(special.beta((1.0 - beta) / alpha, 1.0 - 1.0 / alpha) / alpha)


def lemma_r_rule(alpha: float, beta: float, n: int):
    """Rule for int_0^1 r^{-beta}(1-r^alpha)^{-1/alpha} F(r) dr as sum W_j F(r_j).

    Substituting s = r^alpha turns both endpoint singularities into a Jacobi
    weight, so the rule is exact for F polynomial in r^alpha.
    """
    s, w = gauss_jacobi01(n, (1.0 - beta) / alpha - 1.0, -1.0 / alpha)
    return s ** (1.0 / alpha), w / alpha


def convolution_integral(v: float, alpha: float, beta: float, n: int = 16) -> float:
    """int_v^1 r^{-beta} (1-r^alpha)^{-1/alpha} (r^alpha - v^alpha)^{-1/alpha} dr.

    With r^alpha = v^alpha + s (1 - v^alpha) the endpoint singularities become
    s^{-1/alpha}(1-s)^{-1/alpha}; the remaining factor r^{1-alpha-beta} has a
    near-singularity at s ~ -v^alpha, resolved by panels graded geometrically
    from s = 0 with ``n`` nodes per panel.
    """
    if not 0.0 < v < 1.0:
        raise ValueError("v must lie in (0, 1)")
    va = v ** alpha
    ia = 1.0 / alpha
    expo = 1.0 - alpha - beta

    def smooth(s):
        return (va + s * (1.0 - va)) ** (expo / alpha)

    cuts = [0.0]
    c = max(va, 1e-12)
    while c < 0.5:
        cuts.append(c)
        c *= 4.0
    cuts.append(1.0)
    total = 0.0
    for i, (lo, hi) in enumerate(zip(cuts[:-1], cuts[1:])):
        width = hi - lo
        first, last = i == 0, i == len(cuts) - 2
        if first and last:
            y, w = gauss_jacobi01(n, -ia, -ia)
            total += np.sum(w * smooth(y))
            continue
        if first:
            y, w = gauss_jacobi01(n, -ia, 0.0)
            s = lo + width * y
            total += width ** (1 - ia) * np.sum(w * (1.0 - s) ** (-ia) * smooth(s))
        elif last:
            y, w = gauss_jacobi01(n, 0.0, -ia)
            s = lo + width * y
            total += width ** (1 - ia) * np.sum(w * s ** (-ia) * smooth(s))
        else:
            y, w = gauss_legendre01(n)
            s = lo + width * y
            total += width * np.sum(w * s ** (-ia) * (1.0 - s) ** (-ia) * smooth(s))
    return float(total * (1.0 - va) ** (1.0 - 2.0 * ia) / alpha)


def line_rule(centers, scales, n: int = 16, span: float = 2.0 ** 16):
    """Composite Gauss-Legendre rule on a long interval, graded around each centre."""
    brk = []
    for c, s in zip(centers, scales):
        g = s * 2.0 ** np.arange(-6, np.log2(span) + 1)
        brk.extend([c, *(c + g), *(c - g)])
    brk = np.unique(np.asarray(brk))
    y, w = gauss_legendre01(n)
    a, b = brk[:-1], brk[1:]
    nodes = (a[:, None] + (b - a)[:, None] * y[None, :]).ravel()
    weights = ((b - a)[:, None] * w[None, :]).ravel()
    return nodes, weights


def half_line_map(n: int):
    """Nodes/weights for int_0^inf f(v) dv through v = u/(1-u)."""
    u, w = gauss_legendre01(n)
    v = u / (1.0 - u)
    return v, w / (1.0 - u) ** 2
