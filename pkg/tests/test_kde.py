import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import log_ndtr

from br_ar.errors import ParameterError
from br_ar.kde import (
    Bandwidth,
    Kernel,
    exponential_kernel,
    gaussian_kernel,
    get_kernel,
    make_smoothed_uniform,
    pr_density,
    smoothed_target,
)
from br_ar.noise import NoiseSpec
from br_ar.quadrature import integrate

from oracles import KERNELS, normal_pdf, smoothed

ALL = [gaussian_kernel(), make_smoothed_uniform(), exponential_kernel()]
ORACLE = dict(zip(["gaussian", "smoothed-uniform", "exponential"], KERNELS.values()))


def test_gaussian_functionals():
    k = gaussian_kernel()
    assert k.mass == pytest.approx(1.0, abs=1e-14)
    assert k.l2 == pytest.approx(1 / (2 * np.sqrt(np.pi)), rel=1e-12)
    assert k.autocorr_l2 == pytest.approx(1 / (2 * np.sqrt(2 * np.pi)), rel=1e-12)
    assert k.second_moment == pytest.approx(1.0, rel=1e-12)
    assert k.deriv_integral == pytest.approx(0.0, abs=1e-14)


def test_exponential_functionals():
    k = exponential_kernel()
    assert k.l2 == pytest.approx(0.5, rel=1e-12)
    assert k.autocorr_l2 == pytest.approx(0.25, rel=1e-12)
    assert k.first_moment == pytest.approx(1.0, rel=1e-12)
    assert k.deriv_integral == pytest.approx(-1.0, rel=1e-12)
    assert k.autocorrelation(0.7) == pytest.approx(0.5 * np.exp(-0.7), rel=1e-10)


def test_smoothed_uniform_functionals():
    k = make_smoothed_uniform(0.05)
    assert k.mass == pytest.approx(1.0, abs=1e-13)
    assert k.l2 == pytest.approx(0.50997435612820228, rel=1e-11)  # mpmath, 30 digits
    assert k.deriv_integral == pytest.approx(0.0, abs=1e-13)
    assert k.first_moment == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("k", ALL, ids=str)
def test_kernel_matches_formula(k):
    u = np.linspace(-3, 3, 601)
    assert np.allclose(k(u), ORACLE[k.key[0]](u), atol=1e-14)


@pytest.mark.parametrize("k", ALL, ids=str)
def test_fast_sum_matches_dense_sum(k):
    rng = np.random.default_rng(5)
    centers = rng.standard_normal(300)
    x = np.linspace(-4, 4, 257)
    fast = k.sum_at(x, centers, 0.3)
    dense = Kernel.sum_at(k, x, centers, 0.3)
    assert np.allclose(fast, dense, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("k", ALL, ids=str)
def test_estimate_is_a_density(k):
    res = np.random.default_rng(0).standard_normal(50)
    lo, hi = res.min() - 50, res.max() + 50
    pts = sorted(set(np.concatenate([res + 0.2 * b for b in k.breakpoints]))) if k.breakpoints else None
    mass = integrate(lambda x: pr_density(res, k, 0.2, x), lo, hi, points=pts)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_gaussian_smoothed_normal_closed_form():
    h = 0.4
    target = smoothed_target(gaussian_kernel(), h, NoiseSpec.normal())
    x = np.linspace(-3, 3, 13)
    assert np.allclose(target(x), normal_pdf(x, 0, 1 + h * h), rtol=1e-11)
    table = target.on_interval(-2, 2)
    xs = np.linspace(-2, 2, 1001)
    assert np.max(np.abs(table(xs) - normal_pdf(xs, 0, 1 + h * h))) < 1e-9


def test_exponential_smoothed_normal_closed_form():
    # int_0^inf e^{-s} phi(x - h s) ds = exp(-x/h + 1/(2h^2) + log Phi(x - 1/h)) / h
    h = 0.3
    x = np.linspace(-2, 2, 9)
    exact = np.exp(-x / h + 0.5 / h**2 + log_ndtr(x - 1 / h)) / h
    got = smoothed_target(exponential_kernel(), h, NoiseSpec.normal())(x)
    assert np.allclose(got, exact, rtol=1e-10)


def test_smoothed_target_with_kinks_matches_riemann():
    h, f = 0.25, NoiseSpec.laplace(1.0)
    x = np.array([-1.0, -0.1, 0.0, 0.3, 1.5])
    got = smoothed_target(make_smoothed_uniform(), h, f)(x)
    ref = smoothed(ORACLE["smoothed-uniform"], h, f.pdf, x, -1, 1, 1e-5)
    assert np.allclose(got, ref, rtol=1e-7)


def test_bandwidth_schedule():
    b = Bandwidth(0.14, 0.23)
    assert b.at(100) == pytest.approx(0.14 * 100**-0.23)
    assert Bandwidth.quarter_minus(0.14, 0.02).kappa == pytest.approx(0.23)
    assert b.epsilon_shift == pytest.approx(0.02)
    b.require(2 / 9, 0.25)
    with pytest.raises(ParameterError):
        Bandwidth(0.14, 0.2).require(2 / 9, 0.25)
    with pytest.raises(ParameterError):
        Bandwidth(0.0)


def test_get_kernel_names():
    assert get_kernel("gaussian") is gaussian_kernel()
    assert get_kernel("uniform") == make_smoothed_uniform(0.05)
    assert get_kernel(str(make_smoothed_uniform(0.1))) == make_smoothed_uniform(0.1)
    assert get_kernel("exponential") is exponential_kernel()
    with pytest.raises(ParameterError):
        get_kernel("epanechnikov")


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 2.0), st.integers(1, 40))
def test_estimate_is_nonnegative(h, n):
    res = np.random.default_rng(n).standard_normal(n)
    for k in ALL:
        assert np.all(pr_density(res, k, h, np.linspace(-5, 5, 101)) >= 0)
