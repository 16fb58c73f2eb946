"""Autoregressive models: regimes, characteristic roots and simulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter, lfiltic

from .errors import BrArError, ParameterError, SimulationOverflow
from .noise import NoiseSpec

__all__ = [
    "ArModel",
    "TimeSeries",
    "MODELS",
    "companion_matrix",
    "classify",
    "char_poly_roots",
    "simulate",
    "get_model",
    "OVERFLOW_GUARD",
]

NEUTRAL = "neutral"
STABLE = "stable"
PURELY_UNSTABLE = "purely-unstable"
SEASONAL_UNSTABLE = "seasonal-unstable"
PURELY_EXPLOSIVE = "purely-explosive"
MIXED = "mixed"

OVERFLOW_GUARD = 1e300
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class ArModel:
    """AR(p) model ``X_t = theta_1 X_{t-1} + ... + theta_p X_{t-p} + eps_t``.

    ``theta`` may be empty (the neutral model, where ``X_t = eps_t``).
    """

    theta: tuple[float, ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        theta = tuple(float(v) for v in np.atleast_1d(np.asarray(self.theta, dtype=float)))
        object.__setattr__(self, "theta", theta)
        if not all(np.isfinite(theta)):
            raise ParameterError("AR coefficients must be finite")
        if theta and theta[-1] == 0.0:
            raise ParameterError("theta_p must be non-zero (degree-deficient model)")

    @property
    def p(self) -> int:
        return len(self.theta)

    @property
    def classification(self) -> str:
        return classify(self)

    def __str__(self) -> str:
        label = self.name or "AR"
        return f"{label}(theta={list(self.theta)})"


@dataclass(frozen=True)
class TimeSeries:
    """Observed path ``X_{-p+1}, ..., X_0, X_1, ..., X_n``.

    ``values`` holds the ``p`` pre-sample values followed by the ``n``
    observations.  ``innovations``, when known (simulated paths), holds
    ``eps_1, ..., eps_n`` and ``theta`` the generating coefficients.
    """

    values: np.ndarray
    p: int
    innovations: Optional[np.ndarray] = None
    theta: Optional[tuple] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.p < 0 or values.ndim != 1 or values.size <= self.p:
            raise ParameterError("TimeSeries needs p >= 0 pre-sample values and n >= 1 observations")

    @property
    def n(self) -> int:
        return self.values.size - self.p

    @property
    def observations(self) -> np.ndarray:
        """``X_1, ..., X_n``."""
        return self.values[self.p :]

    @property
    def presample(self) -> np.ndarray:
        """``X_{-p+1}, ..., X_0``."""
        return self.values[: self.p]


# Models used throughout the simulation study.
MODELS = {
    "m0": ArModel((), name="M0"),
    "m1": ArModel((-1 / 12, 5 / 24, 1 / 24), name="M1"),
    "m2": ArModel((0.99,), name="M2"),
    "m3": ArModel((-1.0,), name="M3"),
    "m4": ArModel((1.0,), name="M4"),
    "m5": ArModel((0.0, 1.21), name="M5"),
}


def get_model(key: str) -> ArModel:
    try:
        return MODELS[key.lower()]
    except KeyError:
        raise ParameterError(f"unknown model alias {key!r}; expected one of {sorted(MODELS)}") from None


def companion_matrix(model: ArModel) -> np.ndarray:
    """p x p companion matrix: theta on the first row, ones on the subdiagonal."""
    p = model.p
    if p == 0:
        raise ParameterError("no companion matrix for neutral model")
    c = np.zeros((p, p))
    c[0] = model.theta
    c[np.arange(1, p), np.arange(p - 1)] = 1.0
    return c


def eigen_moduli(model: ArModel) -> np.ndarray:
    """Companion eigenvalue moduli sorted in decreasing order."""
    try:
        lam = np.linalg.eigvals(companion_matrix(model))
    except np.linalg.LinAlgError as exc:
        raise BrArError(f"eigenvalue solver failed for theta={model.theta}: {exc}") from exc
    return np.sort(np.abs(lam))[::-1]


def classify(model: ArModel, tol: float = DEFAULT_TOL) -> str:
    """Regime of ``model`` from its companion eigenvalue moduli.

    Returns one of ``neutral``, ``stable``, ``purely-unstable``,
    ``seasonal-unstable``, ``purely-explosive`` or ``mixed``.  Moduli within
    ``tol`` of one count as unit roots.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if model.p == 0:
        return NEUTRAL
    mod = eigen_moduli(model)
    if mod[0] < 1 - tol:
        return STABLE
    if mod[-1] > 1 + tol:
        return PURELY_EXPLOSIVE
    if np.all(np.abs(mod - 1) <= tol):
        if model.p >= 2 and all(t == 0 for t in model.theta[:-1]) and model.theta[-1] == 1:
            return SEASONAL_UNSTABLE
        return PURELY_UNSTABLE
    return MIXED


def char_poly_roots(model: ArModel) -> np.ndarray:
    """Zeros of ``1 - theta_1 z - ... - theta_p z^p``."""
    if model.p == 0:
        raise ParameterError("neutral model has a constant characteristic polynomial")
    if model.theta[-1] == 0:
        raise ParameterError("degree-deficient characteristic polynomial")
    # numpy.roots wants the leading coefficient first
    coeffs = np.concatenate([-np.asarray(model.theta)[::-1], [1.0]])
    return np.roots(coeffs)


def simulate(
    model: ArModel,
    noise: Optional[NoiseSpec],
    n: int,
    phi0: Optional[Sequence[float]] = None,
    seed=None,
    *,
    rng: Optional[np.random.Generator] = None,
    allow_infinite_variance: bool = False,
) -> TimeSeries:
    """Simulate ``n`` steps of ``model`` driven by i.i.d. ``noise``.

    Parameters
    ----------
    model : ArModel
    noise : NoiseSpec or None
        Innovation law.  ``None`` gives a noiseless recursion, which is only
        meant for deterministic checks.
    n : int
        Number of observations after the pre-sample.
    phi0 : sequence of float, optional
        Initial vector ``Phi_0 = (X_0, X_{-1}, ..., X_{-p+1})``; zero by
        default.
    seed : int or SeedSequence, optional
        Seed for a fresh generator; ignored if ``rng`` is given.
    rng : numpy.random.Generator, optional
    allow_infinite_variance : bool
        Cauchy-like noise is refused for ``p > 0`` unless this is set.

    Raises
    ------
    SimulationOverflow
        If some ``|X_t|`` exceeds ``OVERFLOW_GUARD``.
    """
    n = int(n)
    if n < 1:
        raise ParameterError("n must be >= 1")
    p = model.p
    if phi0 is None:
        phi = np.zeros(p)
    else:
        phi = np.asarray(phi0, dtype=float).ravel()
        if phi.size != p:
            raise ParameterError(f"phi0 must have length p={p}")
        if not np.all(np.isfinite(phi)):
            raise ParameterError("phi0 must be finite")
    if noise is not None and p > 0 and not noise.finite_variance and not allow_infinite_variance:
        raise ParameterError(f"{noise} has infinite variance; only allowed for the neutral model")

    if noise is None:
        eps = np.zeros(n)
    else:
        if rng is None:
            rng = np.random.default_rng(seed)
        eps = np.asarray(noise.sample(rng, n), dtype=float)

    if p == 0:
        x = eps.copy()
    else:
        a = np.concatenate([[1.0], -np.asarray(model.theta)])
        zi = lfiltic([1.0], a, y=phi)
        with np.errstate(over="ignore", invalid="ignore"):
            x, _ = lfilter([1.0], a, eps, zi=zi)
        bad = ~(np.abs(x) <= OVERFLOW_GUARD)
        if bad.any():
            k = int(np.argmax(bad))
            raise SimulationOverflow(k + 1, float(x[k]))
    values = np.concatenate([phi[::-1], x])
    return TimeSeries(values, p, innovations=eps, theta=model.theta)
