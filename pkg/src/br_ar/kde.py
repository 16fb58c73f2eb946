"""Kernels, bandwidth schedule and the Parzen-Rosenblatt estimator.

Three kernels are provided:

``gaussian``
    Standard normal density.
``smoothed-uniform``
    The U([-1, 1]) kernel with its edges replaced by a quintic taper so that
    it is twice continuously differentiable.  With taper width ``e``::

        K(u) = c                          |u| <= 1 - e
        K(u) = c * S((1 - |u|) / e)       1 - e < |u| < 1
        K(u) = 0                          |u| >= 1

    where ``S(v) = 10 v^3 - 15 v^4 + 6 v^5`` (``S(0) = 0``, ``S(1) = 1``,
    first and second derivatives vanish at both ends) and ``c = 1 / (2 - e)``
    because ``S`` integrates to 1/2 on [0, 1].
``exponential``
    One-sided ``K(u) = exp(-u)`` for ``u >= 0``.  It is the only kernel here
    with ``int K' != 0`` (the integral of the derivative over the support is
    -1) and serves the unit-root experiments.

Each kernel computes its functionals (``int K^2``, ``int (K*K)^2``,
``int K'``, moments) by quadrature once, at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import _fast
from .errors import ParameterError
from .noise import NoiseSpec
from .quadrature import composite_nodes, integrate

__all__ = [
    "Kernel",
    "GaussianKernel",
    "SmoothedUniformKernel",
    "ExponentialKernel",
    "Bandwidth",
    "bandwidth_at",
    "make_smoothed_uniform",
    "gaussian_kernel",
    "exponential_kernel",
    "get_kernel",
    "pr_density",
    "smoothed_target",
    "SmoothedTarget",
    "as_density",
]

_QTOL = dict(rtol=1e-12, atol=1e-14)


class Kernel:
    """Base class.  Subclasses define ``__call__``, ``derivative`` and geometry.

    Attributes
    ----------
    support : (float, float)
        Closed support, possibly infinite.
    breakpoints : tuple of float
        Points where the kernel or one of its first derivatives jumps.
    window : (float, float)
        Range outside of which the kernel is below 1e-16 of its peak; used to
        truncate sums and convolutions.
    """

    name = "kernel"
    support: tuple[float, float] = (-np.inf, np.inf)
    breakpoints: tuple[float, ...] = ()
    window: tuple[float, float] = (-np.inf, np.inf)

    def __init__(self):
        self._compute_functionals()

    # -- identity -------------------------------------------------------
    @property
    def key(self) -> tuple:
        return (self.name,)

    def __eq__(self, other):
        return isinstance(other, Kernel) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"{type(self).__name__}{self.key[1:]}"

    def __str__(self):
        return ":".join(str(k) for k in self.key)

    # -- evaluation -----------------------------------------------------
    def __call__(self, u):
        raise NotImplementedError

    def derivative(self, u):
        raise NotImplementedError

    def sum_at(self, x, centers, h: float) -> np.ndarray:
        """``sum_t K((x - centers_t) / h)`` at every ``x``."""
        x = np.asarray(x, dtype=float)
        centers = np.asarray(centers, dtype=float)
        out = np.empty(x.shape)
        flat = x.ravel()
        step = max(1, 4_000_000 // max(1, centers.size))
        res = np.empty(flat.size)
        for i in range(0, flat.size, step):
            u = (flat[i : i + step, None] - centers[None, :]) / h
            res[i : i + step] = self(u).sum(axis=1)
        out[...] = res.reshape(x.shape)
        return out

    # -- functionals ----------------------------------------------------
    def _pieces(self):
        lo, hi = self.support
        return lo, hi, [b for b in self.breakpoints if lo < b < hi]

    def _compute_functionals(self):
        lo, hi, pts = self._pieces()
        self.mass = integrate(self, lo, hi, points=pts, **_QTOL)
        self.l2 = integrate(lambda u: self(u) ** 2, lo, hi, points=pts, **_QTOL)
        self.first_moment = integrate(lambda u: u * self(u), lo, hi, points=pts, **_QTOL)
        self.second_moment = integrate(lambda u: u * u * self(u), lo, hi, points=pts, **_QTOL)
        self.deriv_integral = integrate(self.derivative, lo, hi, points=pts, **_QTOL)
        # the autocorrelation has kinks at differences of breakpoints
        diffs = sorted({a - b for a in self.breakpoints for b in self.breakpoints})
        slo = lo - hi if np.isfinite(hi) and np.isfinite(lo) else -np.inf
        shi = -slo
        self.autocorr_l2 = integrate(
            lambda s: self.autocorrelation(s) ** 2, slo, shi, points=diffs, rtol=1e-11, atol=1e-14
        )

    def autocorrelation(self, s):
        """``int K(t) K(t + s) dt`` (the kernel convolved with its reflection)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi, pts = self._pieces()
        out = np.empty(s.shape)
        for i, si in enumerate(s.flat):
            # K(t + si) is supported on [lo - si, hi - si]
            a, b = max(lo, lo - si), min(hi, hi - si)
            if not a < b:
                out.flat[i] = 0.0
                continue
            brk = [p for p in pts] + [p - si for p in self.breakpoints]
            out.flat[i] = integrate(
                lambda t: self(t) * self(t + si), a, b, points=brk, rtol=1e-13, atol=1e-15
            )
        return out


class GaussianKernel(Kernel):
    name = "gaussian"
    window = (-8.5, 8.5)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        return -u * self(u)

    def sum_at(self, x, centers, h):
        return _sorted_window_sum(self, _fast.GAUSSIAN, 0.0, 0.0, x, centers, h)


class SmoothedUniformKernel(Kernel):
    name = "smoothed-uniform"
    support = (-1.0, 1.0)
    window = (-1.0, 1.0)

    def __init__(self, eps_s: float = 0.05):
        if not 0 < eps_s < 0.5:
            raise ParameterError(f"taper width must lie in (0, 1/2), got {eps_s}")
        self.eps_s = float(eps_s)
        self.height = 1.0 / (2.0 - self.eps_s)
        e = self.eps_s
        self.breakpoints = (-1.0, -1.0 + e, 1.0 - e, 1.0)
        super().__init__()

    @property
    def key(self):
        return (self.name, self.eps_s)

    def __call__(self, u):
        au = np.abs(np.asarray(u, dtype=float))
        v = np.clip((1.0 - au) / self.eps_s, 0.0, 1.0)
        return self.height * v**3 * (10.0 - 15.0 * v + 6.0 * v * v)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        au = np.abs(u)
        v = (1.0 - au) / self.eps_s
        inside = (v > 0) & (v < 1)
        ds = 30.0 * v * v * (1.0 - v) ** 2
        return np.where(inside, -np.sign(u) * self.height * ds / self.eps_s, 0.0)

    def sum_at(self, x, centers, h):
        return _sorted_window_sum(
            self, _fast.SMOOTHED_UNIFORM, self.eps_s, self.height, x, centers, h
        )


class ExponentialKernel(Kernel):
    name = "exponential"
    support = (0.0, np.inf)
    breakpoints = (0.0,)
    window = (0.0, 40.0)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0, np.exp(-np.maximum(u, 0.0)), 0.0)

    def derivative(self, u):
        return -self(u)

    def sum_at(self, x, centers, h):
        # sum_{e_t <= x} exp(-(x - e_t)/h) = exp(L_k - x/h) with
        # L_k = log sum_{t <= k} exp(e_t / h) over the k sorted centers <= x
        x = np.asarray(x, dtype=float)
        e = np.sort(np.asarray(centers, dtype=float))
        if e.size == 0:
            return np.zeros(x.shape)
        lse = np.logaddexp.accumulate(e / h)
        k = np.searchsorted(e, x, side="right")
        out = np.zeros(x.shape)
        has = k > 0
        out[has] = np.exp(lse[k[has] - 1] - x[has] / h)
        return out


def _sorted_window_sum(kernel, kind, eps, c, x, centers, h):
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    centers = np.sort(np.asarray(centers, dtype=float).ravel())
    lo, hi = kernel.window
    if flat.size > 1 and np.any(flat[1:] < flat[:-1]):
        order = np.argsort(flat, kind="stable")
        vals = np.empty(flat.size)
        vals[order] = _fast.window_sum(kind, eps, c, flat[order], centers, float(h), lo, hi)
    else:
        vals = _fast.window_sum(kind, eps, c, np.ascontiguousarray(flat), centers, float(h), lo, hi)
    return vals.reshape(x.shape)


@lru_cache(maxsize=None)
def gaussian_kernel() -> GaussianKernel:
    return GaussianKernel()


@lru_cache(maxsize=None)
def make_smoothed_uniform(eps_s: float = 0.05) -> SmoothedUniformKernel:
    """Smoothed U([-1, 1]) kernel with quintic taper of width ``eps_s``."""
    return SmoothedUniformKernel(float(eps_s))


@lru_cache(maxsize=None)
def exponential_kernel() -> ExponentialKernel:
    return ExponentialKernel()


def get_kernel(spec) -> Kernel:
    """Kernel from a name: ``gaussian``, ``uniform[:eps]`` or ``exponential``."""
    if isinstance(spec, Kernel):
        return spec
    name, _, arg = str(spec).strip().lower().partition(":")
    if name in ("gaussian", "normal", "gauss"):
        return gaussian_kernel()
    if name in ("uniform", "smoothed-uniform", "smoothed_uniform"):
        return make_smoothed_uniform(float(arg) if arg else 0.05)
    if name in ("exponential", "exponential-one-sided", "exp"):
        return exponential_kernel()
    raise ParameterError(f"unknown kernel {spec!r}")


@dataclass(frozen=True)
class Bandwidth:
    """Schedule ``h(n) = h0 * n^(-kappa)``."""

    h0: float
    kappa: float = 0.23

    def __post_init__(self):
        if not self.h0 > 0:
            raise ParameterError("h0 must be positive")
        if not np.isfinite(self.kappa):
            raise ParameterError("kappa must be finite")

    @classmethod
    def quarter_minus(cls, h0: float, epsilon: float) -> "Bandwidth":
        """``h0 * n^(-1/4 + epsilon)``."""
        return cls(h0, 0.25 - epsilon)

    @property
    def epsilon_shift(self) -> float:
        return 0.25 - self.kappa

    def at(self, n: int) -> float:
        return bandwidth_at(self, n)

    def require(self, lower: float, upper: float) -> "Bandwidth":
        """Raise unless ``lower < kappa < upper`` (e.g. 2/9 and 1/4)."""
        if not lower < self.kappa < upper:
            raise ParameterError(f"kappa={self.kappa} outside ({lower:g}, {upper:g})")
        return self


def bandwidth_at(b: Bandwidth, n: int) -> float:
    if n < 1:
        raise ParameterError("n must be >= 1")
    return b.h0 * float(n) ** (-b.kappa)


def pr_density(res, k: Kernel, h: float, x):
    """Parzen-Rosenblatt estimate ``(n h)^-1 sum_t K((x - e_t) / h)``."""
    if not h > 0:
        raise ParameterError("bandwidth must be positive")
    e = np.asarray(res, dtype=float).ravel()
    if e.size == 0:
        raise ParameterError("empty residual set")
    x = np.asarray(x, dtype=float)
    return k.sum_at(x, e, h) / (e.size * h)


# -- densities --------------------------------------------------------------


@dataclass(frozen=True)
class _Density:
    pdf: Callable
    scale: float
    kinks: tuple
    key: object


def as_density(f) -> _Density:
    """Normalize a NoiseSpec or a plain callable into a density record."""
    if isinstance(f, _Density):
        return f
    if isinstance(f, NoiseSpec):
        return _Density(f.pdf, f.scale, f.kinks, f)
    if callable(f):
        return _Density(f, 1.0, tuple(getattr(f, "kinks", ())), None)
    raise ParameterError(f"not a density: {f!r}")


class SmoothedTarget:
    """``x -> (K_h * f)(x) = int K(s) f(x - h s) ds``."""

    def __init__(self, k: Kernel, h: float, f):
        if not h > 0:
            raise ParameterError("bandwidth must be positive")
        self.kernel = k
        self.h = float(h)
        self.density = as_density(f)
        self._tables: dict = {}
        lo = max(k.support[0], k.window[0])
        hi = min(k.support[1], k.window[1])
        self._s_range = (lo, hi)
        width = min(0.5, 0.25 * self.density.scale / self.h)
        edges = [lo, hi] + [b for b in k.breakpoints if lo < b < hi]
        edges = np.unique(edges)
        fine = [edges[:1]]
        for a, b in zip(edges[:-1], edges[1:]):
            m = int(np.ceil((b - a) / width))
            fine.append(np.linspace(a, b, m + 1)[1:])
        self._s, self._w = composite_nodes(np.concatenate(fine), order=16)
        self._ks = k(self._s)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        if self.density.kinks:
            vals = np.array([self._adaptive(xi) for xi in flat])
        else:
            vals = np.empty(flat.size)
            step = max(1, 2_000_000 // self._s.size)
            for i in range(0, flat.size, step):
                xs = flat[i : i + step, None] - self.h * self._s[None, :]
                vals[i : i + step] = self.density.pdf(xs) @ (self._w * self._ks)
        return vals.reshape(x.shape)

    def _adaptive(self, x):
        lo, hi = self._s_range
        pts = list(self.kernel.breakpoints) + [(x - c) / self.h for c in self.density.kinks]
        k, f, h = self.kernel, self.density.pdf, self.h
        return integrate(lambda s: k(s) * f(x - h * s), lo, hi, points=pts, rtol=1e-11, atol=1e-15)

    def on_interval(self, lo: float, hi: float) -> Callable:
        """Fast evaluator on ``[lo, hi]``.

        For densities without kinks the target is tabulated once and
        interpolated by a cubic spline (spacing well below both ``h`` and
        the density scale); otherwise the exact evaluator is returned.
        """
        if self.density.kinks:
            return self
        key = (float(lo), float(hi))
        table = self._tables.get(key)
        if table is None:
            spacing = min(self.density.scale / 64, self.h / 4)
            m = max(8, int(np.ceil((hi - lo) / spacing)))
            grid = np.linspace(lo, hi, m + 1)
            table = CubicSpline(grid, self(grid))
            self._tables[key] = table
        return table


@lru_cache(maxsize=64)
def _cached_target(k, h, f):
    return SmoothedTarget(k, h, f)


def smoothed_target(k: Kernel, h: float, f) -> SmoothedTarget:
    """The smoothed density ``K_h * f`` as a vectorized callable."""
    if isinstance(f, NoiseSpec):
        return _cached_target(k, float(h), f)
    return SmoothedTarget(k, h, f)
