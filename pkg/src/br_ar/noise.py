"""Noise and alternative distributions.

A :class:`NoiseSpec` is an immutable, hashable description of one member of
a small catalogue (normal, Student, uniform, Laplace, Cauchy).  Densities and
CDFs go through :mod:`scipy.stats`; sampling goes through the methods of a
:class:`numpy.random.Generator` so that a seeded stream reproduces the same
draws bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import ParameterError

__all__ = [
    "NoiseSpec",
    "noise_density",
    "noise_cdf",
    "noise_sample",
    "parse_noise",
]

FAMILIES = ("normal", "student", "uniform", "laplace", "cauchy")


@dataclass(frozen=True)
class NoiseSpec:
    """A distribution from the catalogue.

    Parameters are stored positionally in ``params``:

    ========  ===================  ==========================
    family    params               meaning
    ========  ===================  ==========================
    normal    (mean, variance)     N(m, sigma^2)
    student   (df,)                standard Student t(nu)
    uniform   (a,)                 U([-a, a])
    laplace   (b,)                 density exp(-|x|/b) / (2b)
    cauchy    (scale,)             centred Cauchy
    ========  ===================  ==========================

    Use the classmethod constructors rather than the raw initializer.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown noise family {self.family!r}")
        params = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", params)
        expected = 2 if self.family == "normal" else 1
        if len(params) != expected:
            raise ParameterError(f"{self.family} takes {expected} parameter(s), got {len(params)}")
        if not all(np.isfinite(params)):
            raise ParameterError(f"non-finite parameter in {self}")
        positive = params[1] if self.family == "normal" else params[0]
        if positive <= 0:
            names = {"normal": "variance", "student": "df", "uniform": "a", "laplace": "b", "cauchy": "scale"}
            raise ParameterError(f"{self.family}: {names[self.family]} must be > 0, got {positive}")

    @classmethod
    def normal(cls, mean: float = 0.0, variance: float = 1.0) -> "NoiseSpec":
        return cls("normal", (mean, variance))

    @classmethod
    def student(cls, df: float) -> "NoiseSpec":
        return cls("student", (df,))

    @classmethod
    def uniform(cls, a: float) -> "NoiseSpec":
        return cls("uniform", (a,))

    @classmethod
    def laplace(cls, b: float = 1.0) -> "NoiseSpec":
        return cls("laplace", (b,))

    @classmethod
    def cauchy(cls, scale: float = 1.0) -> "NoiseSpec":
        return cls("cauchy", (scale,))

    def __str__(self) -> str:
        return f"{self.family}:{','.join(f'{p:g}' for p in self.params)}"

    @property
    def dist(self):
        """The equivalent frozen :mod:`scipy.stats` distribution."""
        return _frozen(self.family, self.params)

    def pdf(self, x):
        return self.dist.pdf(x)

    def cdf(self, x):
        return self.dist.cdf(x)

    def sample(self, rng: np.random.Generator, size=None):
        fam, p = self.family, self.params
        if fam == "normal":
            return p[0] + np.sqrt(p[1]) * rng.standard_normal(size)
        if fam == "student":
            return rng.standard_t(p[0], size)
        if fam == "uniform":
            return rng.uniform(-p[0], p[0], size)
        if fam == "laplace":
            return rng.laplace(0.0, p[0], size)
        return p[0] * rng.standard_cauchy(size)

    @property
    def mean(self) -> float:
        if self.family == "normal":
            return self.params[0]
        if self.family == "cauchy" or (self.family == "student" and self.params[0] <= 1):
            return float("nan")
        return 0.0

    @property
    def variance(self) -> float:
        """Variance, ``inf`` when the second moment does not exist."""
        fam, p = self.family, self.params
        if fam == "normal":
            return p[1]
        if fam == "student":
            return p[0] / (p[0] - 2) if p[0] > 2 else float("inf")
        if fam == "uniform":
            return p[0] ** 2 / 3
        if fam == "laplace":
            return 2 * p[0] ** 2
        return float("inf")

    @property
    def finite_variance(self) -> bool:
        return np.isfinite(self.variance)

    @property
    def scale(self) -> float:
        """A length over which the density changes appreciably."""
        fam, p = self.family, self.params
        if fam == "normal":
            return float(np.sqrt(p[1]))
        if fam == "student":
            return 1.0
        return p[0]

    @property
    def kinks(self) -> tuple[float, ...]:
        """Points where the density or its derivative is discontinuous."""
        if self.family == "laplace":
            return (0.0,)
        if self.family == "uniform":
            return (-self.params[0], self.params[0])
        return ()

    @property
    def support(self) -> tuple[float, float]:
        if self.family == "uniform":
            return (-self.params[0], self.params[0])
        return (-np.inf, np.inf)


@lru_cache(maxsize=256)
def _frozen(family, params):
    if family == "normal":
        return stats.norm(loc=params[0], scale=np.sqrt(params[1]))
    if family == "student":
        return stats.t(df=params[0])
    if family == "uniform":
        return stats.uniform(loc=-params[0], scale=2 * params[0])
    if family == "laplace":
        return stats.laplace(scale=params[0])
    return stats.cauchy(scale=params[0])


def noise_density(spec: NoiseSpec, x):
    """Density of ``spec`` at ``x``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ParameterError("density evaluated at a non-finite point")
    return spec.pdf(x)


def noise_cdf(spec: NoiseSpec, x):
    """Cumulative distribution function of ``spec`` at ``x``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ParameterError("CDF evaluated at a non-finite point")
    return spec.cdf(x)


def noise_sample(spec: NoiseSpec, rng: np.random.Generator, size=None):
    """Draw from ``spec`` using ``rng``."""
    return spec.sample(rng, size)


def parse_noise(text: str) -> NoiseSpec:
    """Parse ``family:p1,p2`` (e.g. ``normal:0,1``, ``student:5``)."""
    family, _, rest = text.strip().partition(":")
    family = family.strip().lower()
    aliases = {"t": "student", "gauss": "normal", "gaussian": "normal"}
    family = aliases.get(family, family)
    try:
        params = tuple(float(v) for v in rest.split(",")) if rest.strip() else ()
    except ValueError as exc:
        raise ParameterError(f"cannot parse noise spec {text!r}") from exc
    if family == "normal" and not params:
        params = (0.0, 1.0)
    if family in ("laplace", "cauchy") and not params:
        params = (1.0,)
    return NoiseSpec(family, params)
