import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from fracburgers import kernel
from fracburgers.kernel import DomainError, StabilityParams


def cosine_oracle(alpha, r):
    """(1/pi) int_0^inf exp(-k^alpha) cos(k r) dk by QUADPACK's Fourier rule."""
    if r == 0:
        val, _ = integrate.quad(lambda k: np.exp(-k ** alpha), 0, np.inf, epsabs=1e-15, epsrel=1e-13)
    else:
        # QUADPACK reports roundoff near 1e-12; the accuracy needed here is 1e-8
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda k: np.exp(-k ** alpha), 0, 60.0 ** (1 / alpha),
                                    weight="cos", wvar=r, epsabs=1e-17, epsrel=1e-12, limit=2000)
    return val / np.pi


def test_gaussian_and_cauchy_values():
    assert kernel.density(StabilityParams(2.0), 1.0, 0.0) == pytest.approx((4 * np.pi) ** -0.5, rel=1e-12)
    assert kernel.density(StabilityParams(1.0), 1.0, 0.0) == pytest.approx(1 / np.pi, rel=1e-12)
    assert kernel.density(StabilityParams(1.0), 2.0, 1.0) == pytest.approx(2 / (5 * np.pi), rel=1e-12)


def test_origin_value_alpha_1_5():
    p = StabilityParams(1.5)
    gamma_identity = special.gamma(5 / 3) / np.pi
    assert cosine_oracle(1.5, 0.0) == pytest.approx(gamma_identity, rel=1e-10)
    assert kernel.density(p, 1.0, 0.0) == pytest.approx(gamma_identity, rel=1e-10)


def test_gradient_examples():
    assert kernel.gradient(StabilityParams(2.0), 1.0, 1.0) == pytest.approx(
        -(4 * np.pi) ** -0.5 * np.exp(-0.25) / 2, rel=1e-10)
    assert kernel.gradient(StabilityParams(1.0), 1.0, 1.0) == pytest.approx(-1 / (2 * np.pi), rel=1e-10)
    for a in (1.2, 1.5, 1.8):
        g = kernel.gradient(StabilityParams(a, 2), 0.7, np.zeros((1, 2)))
        assert np.all(g == 0)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_table_matches_cosine_oracle(alpha):
    p = StabilityParams(alpha)
    for r in (0.0, 0.37, 1.0, 2.5, 6.0, 15.0, 40.0):
        assert kernel.density(p, 1.0, r) == pytest.approx(cosine_oracle(alpha, r), rel=1e-8)


def test_density_profile_gaussian_three_points():
    tab = kernel.density_profile(StabilityParams(2.0), 3, 1.0)
    np.testing.assert_allclose(tab["r"], [0, 0.5, 1])
    np.testing.assert_allclose(tab["p"], (4 * np.pi) ** -0.5 * np.exp(-tab["r"] ** 2 / 4), rtol=1e-14)
    assert not tab["tail"].any()


def test_density_profile_is_decreasing_and_flags_tail():
    tab = kernel.density_profile(StabilityParams(1.5), 200, 60.0)
    assert np.all(np.diff(tab["p"]) < 0)
    assert tab["tail"][-1] and not tab["tail"][0]


def test_leading_tail_term_at_r_100():
    a = 1.5
    c = math.gamma(1 + a) * math.sin(math.pi * a / 2) / math.pi
    assert kernel.leading_tail_coefficient(a, 1) == pytest.approx(c, rel=1e-12)
    r = 100.0
    assert kernel.density(StabilityParams(a), 1.0, r) == pytest.approx(c * r ** (-1 - a), rel=0.02)
    # the series agrees with quadrature at r = 50
    assert kernel.density(StabilityParams(a), 1.0, 50.0) == pytest.approx(cosine_oracle(a, 50.0), rel=1e-6)


def test_domain_errors():
    with pytest.raises(DomainError):
        StabilityParams(2.5)
    with pytest.raises(DomainError):
        StabilityParams(0.0)
    with pytest.raises(DomainError):
        kernel.density(StabilityParams(1.5), 0.0, 1.0)
    with pytest.raises(DomainError):
        kernel.density(StabilityParams(1.5), -1.0, 1.0)
    with pytest.raises(DomainError):
        kernel.density_profile(StabilityParams(1.5), 1, 1.0)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(0.1, 10), t=st.floats(1e-2, 1e2), x=st.floats(0, 30),
       alpha=st.sampled_from([1.2, 1.5, 1.8]), dim=st.sampled_from([1, 2]))
def test_scaling_property(lam, t, x, alpha, dim):
    p = StabilityParams(alpha, dim)
    lhs = kernel.radial_density(p, t, x)
    rhs = lam ** (dim / alpha) * kernel.radial_density(p, lam * t, lam ** (1 / alpha) * x)
    assert abs(lhs - rhs) <= 1e-10 * lhs


@settings(max_examples=40, deadline=None)
@given(t=st.floats(1e-3, 1e3), r=st.floats(0, 1e3), alpha=st.sampled_from([1.2, 1.5, 1.8]))
def test_positivity(t, r, alpha):
    assert kernel.radial_density(StabilityParams(alpha), t, r) > 0


def test_gradient_matches_finite_difference():
    p = StabilityParams(1.5, 2)
    x = np.array([0.8, -0.4])
    h = 1e-5
    fd = [(kernel.density(p, 0.5, x + h * e) - kernel.density(p, 0.5, x - h * e)) / (2 * h)
          for e in np.eye(2)]
    np.testing.assert_allclose(kernel.gradient(p, 0.5, x), fd, rtol=1e-6)


def test_concurrent_table_construction():
    from concurrent.futures import ThreadPoolExecutor

    p = StabilityParams(1.37)
    with ThreadPoolExecutor(4) as ex:
        vals = list(ex.map(lambda r: float(kernel.density(p, 1.0, r)), [0.5] * 8))
    assert len(set(vals)) == 1
