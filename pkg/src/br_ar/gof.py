"""Goodness-of-fit test for the residual density, with a KS baseline.

The null hypothesis is that the innovations have density ``f0`` on
``[-delta, delta]``.  The test uses ``T_tilde`` with the weight
``a = 1/f0`` on that interval, for which the centering and variance reduce
to ``mu = 2 delta int K^2`` and ``tau^2 = 4 delta int (K*K)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import kolmogorov, ndtr, ndtri

from .errors import InapplicableKernelError, ParameterError
from .kde import Bandwidth, Kernel, as_density, get_kernel
from .noise import NoiseSpec, parse_noise
from .quadrature import integrate
from .statistic import BrReport, WeightFn, simplified_mu, simplified_tau2, standardize, t_tilde

__all__ = [
    "TestConfig",
    "TestReport",
    "KsResult",
    "normal_quantile",
    "delta_distance",
    "br_gof_test",
    "ks_test",
    "wiener_functional",
    "wiener_functional_quantiles",
    "rw_variant_scale",
    "rw_variant_statistic",
]


def normal_quantile(p: float) -> float:
    """Standard normal quantile.

    Uses ``scipy.special.ndtri`` (Cephes rational approximations), whose
    absolute error is at the level of double rounding.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError("probability must lie in (0, 1)")
    return float(ndtri(p))


@lru_cache(maxsize=64)
def _weight_for(f0: NoiseSpec, delta: float) -> WeightFn:
    return WeightFn.truncated_reciprocal(f0, delta)


@dataclass(frozen=True)
class TestConfig:
    """Null density, interval, level, kernel and bandwidth of the test."""

    __test__ = False  # keep pytest from collecting this class

    f0: NoiseSpec
    kernel: Kernel
    bandwidth: Bandwidth
    delta: float = 2.0
    alpha: float = 0.05

    def __post_init__(self):
        if isinstance(self.f0, str):
            object.__setattr__(self, "f0", parse_noise(self.f0))
        if isinstance(self.kernel, str):
            object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if not self.delta > 0:
            raise ParameterError("delta must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must lie in (0, 1)")
        _weight_for(self.f0, float(self.delta))  # raises if f0 vanishes in range

    @property
    def weight(self) -> WeightFn:
        return _weight_for(self.f0, float(self.delta))

    @property
    def critical_value(self) -> float:
        """``u_{1-alpha}``."""
        return normal_quantile(1.0 - self.alpha)

    @property
    def mu(self) -> float:
        return simplified_mu(self.delta, self.kernel)

    @property
    def tau2(self) -> float:
        return simplified_tau2(self.delta, self.kernel)


@dataclass(frozen=True)
class KsResult:
    d: float
    p: float

    def to_dict(self) -> dict:
        return {"d": self.d, "p": self.p}


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    br: BrReport
    reject: bool
    p_value: float
    baseline_ks: Optional[KsResult] = None

    def to_dict(self) -> dict:
        return {
            "br": self.br.to_dict(),
            "reject": self.reject,
            "p_value": self.p_value,
            "baseline_ks": None if self.baseline_ks is None else self.baseline_ks.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        ks = d.get("baseline_ks")
        return cls(
            BrReport.from_dict(d["br"]),
            bool(d["reject"]),
            float(d["p_value"]),
            None if ks is None else KsResult(**ks),
        )


def delta_distance(f, f0, delta: float) -> float:
    """``int_{-delta}^{delta} (f - f0)^2 / f0``."""
    w = WeightFn.truncated_reciprocal(f0, delta)
    df, d0 = as_density(f), as_density(f0)
    pts = list(w.breakpoints) + [k for k in df.kinks if -delta < k < delta]
    return integrate(
        lambda x: (df.pdf(x) - d0.pdf(x)) ** 2 / d0.pdf(x),
        -delta,
        delta,
        points=pts,
        rtol=1e-12,
        atol=1e-15,
    )


def br_gof_test(res, cfg: TestConfig, *, with_ks: bool = False) -> TestReport:
    """Test ``H0: f = f0`` on ``[-delta, delta]`` from a residual set.

    Rejects when ``z > u_{1-alpha}`` (strictly); the p-value is
    ``1 - Phi(z)``.  With ``with_ks`` the one-sample KS test of the same
    residuals against ``f0`` is attached.
    """
    e = np.asarray(res, dtype=float).ravel()
    n = e.size
    h = cfg.bandwidth.at(n)
    value = t_tilde(e, cfg.kernel, h, cfg.f0, cfg.weight)
    mu, tau2 = cfg.mu, cfg.tau2
    z = float(standardize(value, mu, tau2, h))
    br = BrReport("t_tilde", value, mu, tau2, z, n, h)
    ks = ks_test(e, cfg.f0.cdf) if with_ks else None
    return TestReport(br, bool(z > cfg.critical_value), float(ndtr(-z)), ks)


def ks_test(sample, cdf0: Callable) -> KsResult:
    """One-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ParameterError("empty sample")
    u = np.asarray(cdf0(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return KsResult(d, float(kolmogorov(np.sqrt(n) * d)))


# -- random-walk variant ------------------------------------------------------


def wiener_functional(increments: np.ndarray) -> np.ndarray:
    """``Z = ((W(1)^2 - 1)/2 / int W^2 * int W)^2`` for each row of increments.

    ``increments`` holds i.i.d. N(0, 1/steps) steps; ``W`` is their partial
    sum with ``W(0) = 0``, integrated by the trapezoidal rule.
    """
    w = np.cumsum(increments, axis=1)
    steps = w.shape[1]
    w1 = w[:, -1]
    int_w = (w[:, :-1].sum(axis=1) + 0.5 * w1) / steps
    int_w2 = (np.einsum("ij,ij->i", w[:, :-1], w[:, :-1]) + 0.5 * w1 * w1) / steps
    return ((0.5 * (w1 * w1 - 1.0) / int_w2) * int_w) ** 2


WIENER_BATCH = 1000


def _wiener_batch(args):
    seed, index, size, steps = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return wiener_functional(rng.standard_normal((size, steps)) / np.sqrt(steps))


def wiener_functional_quantiles(
    reps: int = 100_000,
    steps: int = 4096,
    seed=0,
    levels=(0.90, 0.95, 0.99),
    *,
    mapper=map,
    return_samples: bool = False,
):
    """Empirical quantiles of the Wiener functional ``Z``.

    Paths are drawn in fixed batches of ``WIENER_BATCH``, batch ``i`` from
    the stream ``SeedSequence(seed, spawn_key=(i,))``, so the result does
    not depend on how ``mapper`` schedules the batches.
    """
    reps, steps = int(reps), int(steps)
    if reps < 1 or steps < 2:
        raise ParameterError("need reps >= 1 and steps >= 2")
    sizes = [min(WIENER_BATCH, reps - s) for s in range(0, reps, WIENER_BATCH)]
    jobs = [(seed, i, size, steps) for i, size in enumerate(sizes)]
    z = np.concatenate(list(mapper(_wiener_batch, jobs)))
    table = {float(q): float(np.quantile(z, q)) for q in levels}
    return (table, z) if return_samples else table


def rw_variant_scale(f0: NoiseSpec, delta: float, k: Kernel) -> float:
    """``sigma_0^2 F_0 (int K')^2`` with ``F_0 = int_{-delta}^{delta} f0``."""
    dk = k.deriv_integral
    if abs(dk) < 1e-12:
        raise InapplicableKernelError(f"{k} has int K' = 0; the random-walk variant needs int K' != 0")
    if not f0.finite_variance:
        raise ParameterError(f"{f0} has no finite second moment")
    f_mass = float(f0.cdf(delta) - f0.cdf(-delta))
    return f0.variance * f_mass * dk * dk


def rw_variant_statistic(t_tilde0, mu, h, f0: NoiseSpec, delta: float, k: Kernel) -> float:
    """``h (T - mu) / (sigma_0^2 F_0 (int K')^2)``, compared with quantiles of ``Z``.

    Experimental: the limit holds for the random walk only, and this
    variant is of limited practical use.
    """
    return h * (t_tilde0 - mu) / rw_variant_scale(f0, delta, k)
