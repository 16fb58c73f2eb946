"""Bickel-Rosenblatt statistics and their asymptotic centering and variance.

For residuals ``e_1..e_n``, bandwidth ``h`` and weight ``a``::

    T_hat   = n h  int (f_hat(x) - (K_h * f)(x))^2 a(x) dx
    T_tilde = n h  int (f_hat(x) - f(x))^2 a(x) dx
    mu      = int f a  *  int K^2
    tau^2   = 2 int f^2 a^2  *  int (K * K)^2

and ``(T - mu) / sqrt(h)`` is asymptotically ``N(0, tau^2)``.

The integrals are evaluated on a composite Gauss-Legendre grid built once per
call: panel edges at the ends of the weight's support, at its breakpoints and
(for kernels with breakpoints) at every ``e_t + h b``; no panel is wider
than ``h``.  On each panel the estimator is then a smooth function, so an
8-point rule is accurate far beyond the statistical noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DegenerateVarianceError, ParameterError
from .kde import Kernel, as_density, pr_density, smoothed_target
from .noise import NoiseSpec
from .quadrature import composite_nodes, integrate

__all__ = [
    "WeightFn",
    "BrReport",
    "centering_mu",
    "variance_tau2",
    "simplified_mu",
    "simplified_tau2",
    "t_hat",
    "t_tilde",
    "standardize",
    "integration_grid",
]

_ENVELOPE = 1e-12
_GRID_ORDER = 8


class WeightFn:
    """Weight ``a`` of the weighted L2 distance.

    Build it with :meth:`truncated_reciprocal`, :meth:`generic`,
    :meth:`indicator` or :meth:`zero`.
    """

    def __init__(self, kind, func, support, breakpoints=(), f0=None, delta=None, key=None):
        self.kind = kind
        self._func = func
        self.support = (float(support[0]), float(support[1]))
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self.f0 = f0
        self.delta = delta
        self._key = key

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.zeros(x.shape)
        if np.any(inside):
            out[inside] = self._func(x[inside])
        return out

    def __eq__(self, other):
        return isinstance(other, WeightFn) and self._key is not None and self._key == other._key

    def __hash__(self):
        return hash(self._key) if self._key is not None else id(self)

    def __repr__(self):
        if self.kind == "truncated-reciprocal":
            return f"WeightFn.truncated_reciprocal({self.f0}, delta={self.delta})"
        return f"WeightFn({self.kind}, support={self.support})"

    @property
    def is_zero(self) -> bool:
        return not self.support[0] < self.support[1]

    @classmethod
    def truncated_reciprocal(cls, f0, delta: float) -> "WeightFn":
        """``1 / f0`` on ``[-delta, delta]`` and 0 outside."""
        if not delta > 0:
            raise ParameterError("delta must be positive")
        dens = as_density(f0)
        probe = np.concatenate([np.linspace(-delta, delta, 2001), list(dens.kinks)])
        probe = probe[np.abs(probe) <= delta]
        vals = dens.pdf(probe)
        if not np.all(vals > 0):
            raise ParameterError(f"f0 vanishes on [-{delta}, {delta}]")
        pdf = dens.pdf
        return cls(
            "truncated-reciprocal",
            lambda x: 1.0 / pdf(x),
            (-delta, delta),
            breakpoints=[k for k in dens.kinks if -delta < k < delta],
            f0=f0,
            delta=float(delta),
            key=("truncated-reciprocal", dens.key, float(delta)) if dens.key is not None else None,
        )

    @classmethod
    def generic(cls, a: Callable, support=None, breakpoints=()) -> "WeightFn":
        """Arbitrary non-negative integrable weight.

        Without ``support`` the smallest interval where ``a >= 1e-12`` is
        located by scanning outward on a fine grid.
        """
        if support is None:
            support = _effective_support(a)
        return cls("generic", a, support, breakpoints=breakpoints)

    @classmethod
    def indicator(cls, lo: float, hi: float) -> "WeightFn":
        return cls(
            "generic", lambda x: np.ones_like(x), (lo, hi), key=("indicator", float(lo), float(hi))
        )

    @classmethod
    def zero(cls) -> "WeightFn":
        return cls("generic", lambda x: np.zeros_like(x), (0.0, 0.0), key=("zero",))


def _effective_support(a):
    radius = 1.0
    while radius <= 2.0**20:
        x = np.linspace(-radius, radius, 40001)
        v = np.asarray(a(x), dtype=float)
        if np.any(v < 0):
            raise ParameterError("weight must be non-negative")
        big = np.nonzero(v >= _ENVELOPE)[0]
        if big.size == 0:
            radius *= 2
            continue
        if big[0] > 0 and big[-1] < x.size - 1:
            step = x[1] - x[0]
            return (x[big[0]] - step, x[big[-1]] + step)
        radius *= 2
    raise ParameterError("weight envelope does not decay; is it integrable?")


@dataclass(frozen=True)
class BrReport:
    statistic_kind: str
    value: float
    mu: float
    tau2: float
    z: float
    n: int
    h: float

    def to_dict(self) -> dict:
        return dict(
            statistic_kind=self.statistic_kind,
            value=self.value,
            mu=self.mu,
            tau2=self.tau2,
            z=self.z,
            n=self.n,
            h=self.h,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "BrReport":
        return cls(**d)


# -- asymptotic constants -----------------------------------------------------


def _weighted_integral(g, a: WeightFn, kinks=()) -> float:
    if a.is_zero:
        return 0.0
    lo, hi = a.support
    pts = list(a.breakpoints) + list(kinks)
    return integrate(lambda x: g(x) * a(x), lo, hi, points=pts, rtol=1e-12, atol=1e-15)


def centering_mu(f, a: WeightFn, k: Kernel) -> float:
    """``mu = int f a * int K^2``."""
    dens = as_density(f)
    return _weighted_integral(dens.pdf, a, dens.kinks) * k.l2


def variance_tau2(f, a: WeightFn, k: Kernel) -> float:
    """``tau^2 = 2 int f^2 a^2 * int (K * K)^2``; 0 for a null weight."""
    dens = as_density(f)
    if a.is_zero:
        return 0.0
    lo, hi = a.support
    pts = list(a.breakpoints) + list(dens.kinks)
    fa2 = integrate(
        lambda x: (dens.pdf(x) * a(x)) ** 2, lo, hi, points=pts, rtol=1e-12, atol=1e-15
    )
    return 2.0 * fa2 * k.autocorr_l2


def simplified_mu(delta: float, k: Kernel) -> float:
    """Centering for the truncated-reciprocal weight: ``2 delta int K^2``."""
    return float(2.0 * delta * k.l2)


def simplified_tau2(delta: float, k: Kernel) -> float:
    """Variance for the truncated-reciprocal weight: ``4 delta int (K * K)^2``."""
    return float(4.0 * delta * k.autocorr_l2)


# -- statistics ---------------------------------------------------------------


def integration_grid(lo, hi, h, k: Kernel, centers=None, breakpoints=()):
    """Composite Gauss-Legendre nodes/weights on ``[lo, hi]``.

    Panel edges include ``breakpoints`` and, when the kernel has
    breakpoints, every ``center + h * b`` falling inside the interval.
    Panels are at most ``h`` wide.
    """
    edges = [np.array([lo, hi]), np.asarray(breakpoints, dtype=float)]
    if k.breakpoints and centers is not None:
        c = np.asarray(centers, dtype=float)
        for b in k.breakpoints:
            edges.append(c + h * b)
    e = np.concatenate(edges)
    e = np.unique(e[(e >= lo) & (e <= hi)])
    widths = np.diff(e)
    m = np.maximum(1, np.ceil(widths / h - 1e-9).astype(int))
    starts = np.repeat(e[:-1], m)
    step = np.repeat(widths / m, m)
    offs = np.arange(m.sum()) - np.repeat(np.cumsum(m) - m, m)
    fine = np.append(starts + offs * step, e[-1])
    return composite_nodes(fine, order=_GRID_ORDER)


@lru_cache(maxsize=128)
def _static_grid(lo, hi, h, k, breakpoints, a):
    x, w = integration_grid(lo, hi, h, k, None, breakpoints)
    aw = w * a(x)
    x.setflags(write=False)
    aw.setflags(write=False)
    return x, aw


def _static(k, h, a: WeightFn) -> bool:
    return not k.breakpoints and a._key is not None


def _grid_for(res, k, h, a: WeightFn):
    lo, hi = a.support
    if _static(k, h, a):
        return _static_grid(lo, hi, float(h), k, a.breakpoints, a)
    x, w = integration_grid(lo, hi, h, k, res, a.breakpoints)
    return x, w * a(x)


@lru_cache(maxsize=128)
def _static_density(h, k, a, f):
    x, _ = _grid_for(None, k, h, a)
    v = as_density(f).pdf(x)
    v.setflags(write=False)
    return v


def _br_value(res, k, h, a: WeightFn, target) -> float:
    if not h > 0:
        raise ParameterError("bandwidth must be positive")
    e = np.asarray(res, dtype=float).ravel()
    if e.size == 0:
        raise ParameterError("empty residual set")
    if a.is_zero:
        return 0.0
    x, aw = _grid_for(e, k, h, a)
    fx = target(x) if callable(target) else target
    diff = pr_density(e, k, h, x) - fx
    return float(e.size * h * np.dot(aw, diff * diff))


def t_hat(res, k: Kernel, h: float, f, a: WeightFn) -> float:
    """``n h int (f_hat - K_h * f)^2 a``."""
    if a.is_zero:
        return 0.0
    target = smoothed_target(k, h, f)
    lo, hi = a.support
    return _br_value(res, k, h, a, target.on_interval(lo, hi))


def t_tilde(res, k: Kernel, h: float, f0, a: WeightFn) -> float:
    """``n h int (f_hat - f0)^2 a``."""
    if isinstance(f0, NoiseSpec) and not a.is_zero and _static(k, h, a):
        return _br_value(res, k, h, a, _static_density(float(h), k, a, f0))
    return _br_value(res, k, h, a, as_density(f0).pdf)


def standardize(value: float, mu: float, tau2: float, h: float) -> float:
    """``(value - mu) / (sqrt(tau2) sqrt(h))``."""
    if not tau2 > 0:
        raise DegenerateVarianceError("tau^2 must be positive; the weight is degenerate")
    if not h > 0:
        raise ParameterError("bandwidth must be positive")
    return (value - mu) / (np.sqrt(tau2) * np.sqrt(h))
