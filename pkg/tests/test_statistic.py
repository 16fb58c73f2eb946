import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import log_ndtr

from br_ar.errors import DegenerateVarianceError, ParameterError
from br_ar.kde import exponential_kernel, gaussian_kernel, make_smoothed_uniform
from br_ar.noise import NoiseSpec
from br_ar.statistic import (
    BrReport,
    WeightFn,
    centering_mu,
    simplified_mu,
    simplified_tau2,
    standardize,
    t_hat,
    t_tilde,
    variance_tau2,
)

from oracles import exp_k, gauss_k, midpoints, normal_pdf, riemann_br, smooth_uniform_k, smoothed

F0 = NoiseSpec.normal()
A = WeightFn.truncated_reciprocal(F0, 2.0)
INV_F0 = lambda x: 1 / normal_pdf(x)


def test_simplified_constants_closed_form():
    k = gaussian_kernel()
    assert simplified_mu(2.0, k) == pytest.approx(2 / np.sqrt(np.pi), abs=1e-12)
    assert simplified_tau2(2.0, k) == pytest.approx(4 / np.sqrt(2 * np.pi), abs=1e-12)


@pytest.mark.parametrize("f0", [NoiseSpec.normal(), NoiseSpec.laplace(), NoiseSpec.student(5)], ids=str)
@pytest.mark.parametrize("k", [gaussian_kernel(), make_smoothed_uniform()], ids=str)
def test_generic_constants_reduce_under_reciprocal_weight(f0, k):
    a = WeightFn.truncated_reciprocal(f0, 2.0)
    assert centering_mu(f0, a, k) == pytest.approx(simplified_mu(2.0, k), abs=1e-10)
    assert variance_tau2(f0, a, k) == pytest.approx(simplified_tau2(2.0, k), abs=1e-10)


def test_generic_weight_constants():
    # a = 1 on [-1, 1]: mu = (2 Phi(1) - 1) int K^2
    k = gaussian_kernel()
    a = WeightFn.indicator(-1.0, 1.0)
    mass = F0.cdf(1.0) - F0.cdf(-1.0)
    assert centering_mu(F0, a, k) == pytest.approx(mass * k.l2, rel=1e-12)
    fa2 = 0.5 / np.sqrt(np.pi) * (2 * NoiseSpec.normal(0, 0.5).cdf(1.0) - 1)
    assert variance_tau2(F0, a, k) == pytest.approx(2 * fa2 * k.autocorr_l2, rel=1e-10)


def test_generic_weight_finds_support():
    a = WeightFn.generic(lambda x: np.exp(-x * x))
    lo, hi = a.support
    assert -6 < lo < -5 and 5 < hi < 6


def test_tiny_instance_against_riemann():
    res = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    got = t_tilde(res, gaussian_kernel(), 0.5, F0, A)
    ref = riemann_br(res, gauss_k, 0.5, normal_pdf, INV_F0, -2, 2, 1e-4)
    assert got == pytest.approx(ref, rel=1e-5)


@pytest.mark.parametrize("seed", range(3))
def test_t_tilde_against_riemann(seed):
    rng = np.random.default_rng(seed)
    res = rng.standard_normal(rng.integers(3, 21))
    h = rng.uniform(0.2, 0.8)
    for k, kern, step in [
        (gaussian_kernel(), gauss_k, 1e-4),
        (make_smoothed_uniform(), smooth_uniform_k, 1e-4),
        (exponential_kernel(), exp_k, 1e-6),
    ]:
        ref = riemann_br(res, kern, h, normal_pdf, INV_F0, -2, 2, step)
        assert t_tilde(res, k, h, F0, A) == pytest.approx(ref, rel=1e-5)


def test_t_hat_gaussian_closed_form_target():
    res = np.random.default_rng(4).standard_normal(15)
    h = 0.35
    ref = riemann_br(res, gauss_k, h, lambda x: normal_pdf(x, 0, 1 + h * h), INV_F0, -2, 2, 1e-4)
    assert t_hat(res, gaussian_kernel(), h, F0, A) == pytest.approx(ref, rel=1e-5)


def test_t_hat_exponential_closed_form_target():
    res = np.random.default_rng(5).standard_normal(12)
    h = 0.45
    target = lambda x: np.exp(-x / h + 0.5 / h**2 + log_ndtr(x - 1 / h)) / h
    ref = riemann_br(res, exp_k, h, target, INV_F0, -2, 2, 1e-6)
    assert t_hat(res, exponential_kernel(), h, F0, A) == pytest.approx(ref, rel=1e-5)


def test_t_hat_smoothed_uniform_against_riemann():
    res = np.random.default_rng(6).standard_normal(10)
    h = 0.4
    x, _ = midpoints(-2, 2, 1e-4)
    tv = smoothed(smooth_uniform_k, h, normal_pdf, x, -1, 1, 1e-3)
    ref = riemann_br(res, smooth_uniform_k, h, lambda _: tv, INV_F0, -2, 2, 1e-4)
    assert t_hat(res, make_smoothed_uniform(), h, F0, A) == pytest.approx(ref, rel=1e-5)


def test_laplace_null_with_kink():
    f0 = NoiseSpec.laplace()
    a = WeightFn.truncated_reciprocal(f0, 2.0)
    res = np.random.default_rng(2).laplace(size=15)
    ref = riemann_br(res, gauss_k, 0.4, f0.pdf, lambda x: 1 / f0.pdf(x), -2, 2, 1e-4)
    assert t_tilde(res, gaussian_kernel(), 0.4, f0, a) == pytest.approx(ref, rel=1e-5)


def test_zero_weight():
    z = WeightFn.zero()
    k = gaussian_kernel()
    assert variance_tau2(F0, z, k) == 0.0
    assert t_tilde([0.1, 0.2], k, 0.3, F0, z) == 0.0
    with pytest.raises(DegenerateVarianceError):
        standardize(1.0, 0.0, 0.0, 0.3)


def test_weight_rejects_vanishing_null():
    with pytest.raises(ParameterError):
        WeightFn.truncated_reciprocal(NoiseSpec.uniform(1.0), 2.0)


def test_standardize():
    assert standardize(3.0, 1.0, 4.0, 0.25) == pytest.approx(2.0)


def test_report_round_trip():
    r = BrReport("t_tilde", 1.5, 1.1, 1.6, 0.3, 100, 0.05)
    assert BrReport.from_dict(r.to_dict()) == r


def test_empty_residuals():
    with pytest.raises(ParameterError):
        t_tilde([], gaussian_kernel(), 0.3, F0, A)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=1, max_size=30), st.floats(0.05, 1.5))
def test_statistics_are_nonnegative(res, h):
    for k in (gaussian_kernel(), exponential_kernel()):
        assert t_tilde(res, k, h, F0, A) >= 0
        assert t_hat(res, k, h, F0, A) >= 0


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=20), st.floats(0.1, 1.0))
def test_statistics_ignore_residual_order(res, h):
    k = make_smoothed_uniform()
    assert t_tilde(res, k, h, F0, A) == pytest.approx(t_tilde(res[::-1], k, h, F0, A), rel=1e-12, abs=1e-14)
