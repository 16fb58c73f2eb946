"""Replicated experiments: empirical level and power, bandwidth calibration,
empirical convergence rates and the unit-root kernel experiment.

Replication ``r`` of an experiment with master seed ``s`` draws from
``default_rng(SeedSequence(s, spawn_key=(r, k)))`` where ``k`` counts
retries, so results do not depend on the order or process in which
replications run.  Every function taking ``mapper`` accepts any
``map``-like callable (for instance ``ProcessPoolExecutor.map``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .ar import MODELS, ArModel, simulate
from .errors import CalibrationError, ParameterError, RetryableError, RetryLimitExceeded
from .estimation import fit_residuals, ols_estimate
from .gof import TestConfig, br_gof_test, wiener_functional_quantiles
from .kde import Bandwidth, Kernel, exponential_kernel, gaussian_kernel
from .noise import NoiseSpec
from .statistic import WeightFn, simplified_mu, t_hat

__all__ = [
    "McConfig",
    "McReport",
    "RateReport",
    "SweepPoint",
    "AsymKernelReport",
    "replication_rng",
    "empirical_level",
    "empirical_power",
    "power_sweep",
    "calibrate_h0",
    "RATE_CATALOGUE",
    "rate_check",
    "asym_kernel_experiment",
]

UNIT_ROOT_NOTE = "unit root: outside the asymptotic guarantee of the test"
CHUNK = 25


def replication_rng(seed: int, rep: int, retry: int = 0) -> np.random.Generator:
    """Independent stream for replication ``rep`` at retry ``retry``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, retry)))


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo cell.

    ``noise`` is the true innovation law and ``f0`` the null density.
    ``fit_order`` defaults to the model order.
    """

    model: ArModel
    noise: NoiseSpec
    f0: NoiseSpec
    kernel: Kernel
    bandwidth: Bandwidth
    n: int
    reps: int = 1000
    alpha: float = 0.05
    delta: float = 2.0
    seed: int = 0
    retry_limit: int = 20
    fit_order: Optional[int] = None
    phi0: Optional[tuple] = None
    keep_z: bool = False
    with_ks: bool = False

    def __post_init__(self):
        if isinstance(self.model, str):
            object.__setattr__(self, "model", MODELS[self.model.lower()])
        if self.reps < 1:
            raise ParameterError("reps must be >= 1")
        if self.retry_limit < 0:
            raise ParameterError("retry limit must be >= 0")
        if self.n < 2:
            raise ParameterError("n must be >= 2")
        if self.fit_order is not None and self.fit_order < 0:
            raise ParameterError("fit order must be >= 0")
        self.test_config  # validates f0, delta, alpha

    @property
    def order(self) -> int:
        return self.model.p if self.fit_order is None else self.fit_order

    @property
    def test_config(self) -> TestConfig:
        return TestConfig(self.f0, self.kernel, self.bandwidth, self.delta, self.alpha)


@dataclass(frozen=True)
class McReport:
    rejection_rate: float
    reps_used: int
    retries: int
    stderr: float
    z_values: Optional[tuple] = None
    ks_rejection_rate: Optional[float] = None
    note: str = ""
    runtime: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        d = {
            "rejection_rate": self.rejection_rate,
            "reps_used": self.reps_used,
            "retries": self.retries,
            "stderr": self.stderr,
            "z_values": None if self.z_values is None else list(self.z_values),
            "ks_rejection_rate": self.ks_rejection_rate,
            "note": self.note,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "McReport":
        d = dict(d)
        if d.get("z_values") is not None:
            d["z_values"] = tuple(d["z_values"])
        return cls(**d)


def _one_rep(cfg: McConfig, test: TestConfig, rep: int):
    last = None
    for retry in range(cfg.retry_limit + 1):
        rng = replication_rng(cfg.seed, rep, retry)
        try:
            series = simulate(cfg.model, cfg.noise, cfg.n, cfg.phi0, rng=rng)
            _, res = fit_residuals(series, cfg.order)
            report = br_gof_test(res, test, with_ks=cfg.with_ks)
        except RetryableError as exc:
            last = exc
            continue
        ks_rej = report.baseline_ks is not None and report.baseline_ks.p < cfg.alpha
        return report.br.z, report.reject, ks_rej, retry
    raise RetryLimitExceeded(rep, cfg.retry_limit, last)


def _run_chunk(args):
    cfg, start, stop = args
    test = cfg.test_config
    out = np.empty((stop - start, 4))
    for i, rep in enumerate(range(start, stop)):
        out[i] = _one_rep(cfg, test, rep)
    return out


def _run(cfg: McConfig, mapper: Callable) -> McReport:
    t0 = time.perf_counter()
    jobs = [(cfg, s, min(s + CHUNK, cfg.reps)) for s in range(0, cfg.reps, CHUNK)]
    rows = np.concatenate(list(mapper(_run_chunk, jobs)))
    z, rej, ks_rej, retries = rows.T
    rate = float(rej.mean())
    return McReport(
        rejection_rate=rate,
        reps_used=cfg.reps,
        retries=int(retries.sum()),
        stderr=math.sqrt(rate * (1 - rate) / cfg.reps),
        z_values=tuple(float(v) for v in z) if cfg.keep_z else None,
        ks_rejection_rate=float(ks_rej.mean()) if cfg.with_ks else None,
        note=UNIT_ROOT_NOTE if cfg.model.theta == (1.0,) else "",
        runtime=time.perf_counter() - t0,
    )


def empirical_level(cfg: McConfig, *, mapper: Callable = map) -> McReport:
    """Rejection frequency when the innovations follow ``f0``.

    Overflowing or singular replications are redrawn from a fresh stream up
    to ``cfg.retry_limit`` times; the redraws are counted in ``retries``.
    """
    if cfg.noise != cfg.f0:
        raise ParameterError("empirical_level needs noise == f0; use empirical_power")
    return _run(cfg, mapper)


def empirical_power(cfg: McConfig, alternative: NoiseSpec, *, mapper: Callable = map) -> McReport:
    """Rejection frequency when the innovations follow ``alternative``."""
    return _run(replace(cfg, noise=alternative), mapper)


@dataclass(frozen=True)
class SweepPoint:
    parameter: float
    alternative: NoiseSpec
    report: McReport

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "alternative": str(self.alternative),
            **self.report.to_dict(),
        }


def power_sweep(
    cfg: McConfig, alternatives: Sequence[tuple[float, NoiseSpec]], *, mapper: Callable = map
) -> list[SweepPoint]:
    """Power at each ``(parameter, alternative)`` pair.

    All points share the master seed, so location and scale alternatives
    are driven by common random numbers and the curve is smooth.
    """
    return [SweepPoint(float(v), alt, empirical_power(cfg, alt, mapper=mapper)) for v, alt in alternatives]


def mean_alternatives(values, variance: float = 1.0):
    return [(m, NoiseSpec.normal(m, variance)) for m in values]


def variance_alternatives(values, mean: float = 0.0):
    return [(s2, NoiseSpec.normal(mean, s2)) for s2 in values]


# -- bandwidth calibration ----------------------------------------------------


@dataclass(frozen=True)
class Calibration:
    h0: float
    level: float
    evaluations: tuple

    def to_dict(self) -> dict:
        return {"h0": self.h0, "level": self.level, "evaluations": [list(e) for e in self.evaluations]}


def calibrate_h0(
    target_alpha: float,
    kernel: Kernel,
    n: int,
    search: tuple[float, float],
    *,
    kappa: float = 0.23,
    reps: int = 1000,
    seed: int = 0,
    delta: float = 2.0,
    band: float = 0.005,
    grid: int = 9,
    max_bisections: int = 12,
    mapper: Callable = map,
) -> Calibration:
    """Choose ``h0`` so that the level on the neutral model is near ``target_alpha``.

    A coarse grid over ``search`` is scanned first; if no grid point lands
    within ``band`` of the target, the first bracketing pair is bisected.
    All evaluations reuse the same seed.  A degenerate range ``[h, h]``
    returns ``h`` with its achieved level.

    Raises
    ------
    CalibrationError
        If no evaluated ``h0`` reaches the band.
    """
    lo, hi = map(float, search)
    if not 0 < lo <= hi:
        raise ParameterError("search range must satisfy 0 < lo <= hi")
    f0 = NoiseSpec.normal()
    evaluated: dict[float, float] = {}

    def level(h0):
        if h0 not in evaluated:
            cfg = McConfig(MODELS["m0"], f0, f0, kernel, Bandwidth(h0, kappa), n, reps, target_alpha, delta, seed)
            evaluated[h0] = empirical_level(cfg, mapper=mapper).rejection_rate
        return evaluated[h0]

    def result(h0):
        return Calibration(h0, evaluated[h0], tuple(sorted(evaluated.items())))

    if lo == hi:
        level(lo)
        return result(lo)
    pts = np.linspace(lo, hi, grid)
    vals = [level(float(h)) for h in pts]
    best = min(evaluated, key=lambda h: (abs(evaluated[h] - target_alpha), h))
    if abs(evaluated[best] - target_alpha) <= band:
        return result(best)
    for a, b, va, vb in zip(pts[:-1], pts[1:], vals[:-1], vals[1:]):
        if (va - target_alpha) * (vb - target_alpha) < 0:
            a, b = float(a), float(b)
            for _ in range(max_bisections):
                mid = 0.5 * (a + b)
                vm = level(mid)
                if abs(vm - target_alpha) <= band:
                    return result(mid)
                if (level(a) - target_alpha) * (vm - target_alpha) < 0:
                    b = mid
                else:
                    a = mid
            break
    best = min(evaluated, key=lambda h: (abs(evaluated[h] - target_alpha), h))
    raise CalibrationError(
        f"no h0 in [{lo}, {hi}] reached level {target_alpha} +/- {band}; "
        f"closest h0={best:.4g} with level {evaluated[best]:.4f}"
    )


# -- empirical rates ----------------------------------------------------------


@dataclass(frozen=True)
class RateQuantity:
    model: ArModel
    statistic: str
    exponent: Optional[float]
    description: str
    default_grid: tuple = tuple(2**k for k in range(8, 14))
    max_slope: Optional[float] = None  # pass rule when no exponent is known


RATE_CATALOGUE = {
    "sum-xt-pos-unit": RateQuantity(ArModel((1.0,)), "sum", 1.5, "|sum X_t|, root at +1"),
    "sum-xt-neg-unit": RateQuantity(ArModel((-1.0,)), "sum", 0.5, "|sum X_t|, root at -1"),
    "sum-xt2-unstable": RateQuantity(ArModel((1.0,)), "sum2", 2.0, "sum X_t^2, random walk"),
    "max-xt-unstable": RateQuantity(ArModel((1.0,)), "max", 0.5, "max |X_t|, random walk"),
    "sum-xt-seasonal": RateQuantity(ArModel((0.0, 0.0, 0.0, 1.0)), "sum", 1.5, "|sum X_t|, X_t = X_{t-4} + e_t"),
    "sum-xt-cosine": RateQuantity(
        ArModel((2 * math.cos(math.pi / 3), -1.0)), "sum", 0.5, "|sum X_t|, complex unit roots at angle pi/3"
    ),
    "sum-xt-double-root": RateQuantity(ArModel((2.0, -1.0)), "sum", 2.5, "|sum X_t|, double root at +1"),
    "sum-xt-lag2": RateQuantity(ArModel((0.0, 1.0)), "sum", 1.5, "|sum X_t|, X_t = X_{t-2} + e_t"),
    "theta-err-stable": RateQuantity(MODELS["m1"], "theta", -0.5, "||theta_hat - theta||, stable M1"),
    "theta-err-unstable": RateQuantity(MODELS["m4"], "theta", -1.0, "||theta_hat - theta||, random walk M4"),
    "theta-err-explosive": RateQuantity(
        MODELS["m5"], "theta", None, "||theta_hat - theta||, explosive M5 (exponential decay)",
        default_grid=(250, 500, 1000, 2000), max_slope=-3.0,
    ),
}


@dataclass(frozen=True)
class RateReport:
    quantity: str
    n_grid: tuple
    medians: tuple
    slope: float
    theory: Optional[float]
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "n_grid": list(self.n_grid),
            "medians": list(self.medians),
            "slope": self.slope,
            "theory": self.theory,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RateReport":
        d = dict(d)
        d["n_grid"], d["medians"] = tuple(d["n_grid"]), tuple(d["medians"])
        return cls(**d)


def _rate_values(args):
    qid, n, j, reps, seed, noise = args
    q = RATE_CATALOGUE[qid]
    out = np.empty(reps)
    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j, rep)))
        s = simulate(q.model, noise, n, rng=rng)
        x = s.observations
        if q.statistic == "sum":
            out[rep] = abs(x.sum())
        elif q.statistic == "sum2":
            out[rep] = np.dot(x, x)
        elif q.statistic == "max":
            out[rep] = np.abs(x).max()
        else:
            fit, _ = fit_residuals(s, q.model.p)
            err = fit.theta_hat - np.asarray(q.model.theta)
            out[rep] = np.linalg.norm(err)
    return out


def rate_check(
    quantity: str,
    n_grid: Optional[Sequence[int]] = None,
    reps: int = 200,
    seed: int = 0,
    *,
    tolerance: float = 0.15,
    noise: Optional[NoiseSpec] = None,
    mapper: Callable = map,
) -> RateReport:
    """Fit the log-log slope of the median magnitude of a catalogue quantity.

    Paths start from zero and use N(0, 1) innovations unless ``noise`` is
    given.  Passes when the slope is within ``tolerance`` of the exponent.
    """
    if quantity not in RATE_CATALOGUE:
        raise ParameterError(f"unknown quantity {quantity!r}; expected one of {sorted(RATE_CATALOGUE)}")
    q = RATE_CATALOGUE[quantity]
    grid = tuple(int(n) for n in (q.default_grid if n_grid is None else n_grid))
    if len(grid) < 3:
        raise ParameterError("n grid needs at least 3 points")
    noise = NoiseSpec.normal() if noise is None else noise
    jobs = [(quantity, n, j, int(reps), seed, noise) for j, n in enumerate(grid)]
    medians = tuple(float(np.median(v)) for v in mapper(_rate_values, jobs))
    slope = float(np.polyfit(np.log(grid), np.log(medians), 1)[0])
    if q.exponent is None:
        passed = slope < q.max_slope
    else:
        passed = abs(slope - q.exponent) <= tolerance
    return RateReport(quantity, grid, medians, slope, q.exponent, tolerance, bool(passed))


# -- unit root with an asymmetric kernel ---------------------------------------


@dataclass(frozen=True)
class AsymKernelReport:
    """Medians across ``n`` of the unit-root statistic under two scalings.

    ``gaussian_sqrt`` holds ``median |T_hat - mu| / sqrt(h)`` for the
    gaussian kernel and ``exponential_h`` holds ``median |h (T_hat - mu)|``
    for the one-sided exponential kernel.  ``exponential_q95`` is the
    empirical 0.95 quantile of ``h (T_hat - mu)`` at each ``n`` and
    ``predicted_q95`` the corresponding quantile of the Wiener limit.
    """

    n_grid: tuple
    gaussian_sqrt: tuple
    exponential_h: tuple
    exponential_sqrt: tuple
    exponential_q95: tuple
    predicted_q95: float
    limit_scale: float

    @staticmethod
    def _ratios(v):
        return tuple(b / a for a, b in zip(v[:-1], v[1:]))

    @property
    def gaussian_ratios(self) -> tuple:
        return self._ratios(self.gaussian_sqrt)

    @property
    def exponential_ratios(self) -> tuple:
        return self._ratios(self.exponential_h)

    def to_dict(self) -> dict:
        return {
            "n_grid": list(self.n_grid),
            "gaussian_sqrt": list(self.gaussian_sqrt),
            "exponential_h": list(self.exponential_h),
            "exponential_sqrt": list(self.exponential_sqrt),
            "exponential_q95": list(self.exponential_q95),
            "predicted_q95": self.predicted_q95,
            "limit_scale": self.limit_scale,
        }


def _asym_values(args):
    n, j, reps, seed, h0, kappa, delta = args
    f0 = NoiseSpec.normal()
    a = WeightFn.truncated_reciprocal(f0, delta)
    kernels = (gaussian_kernel(), exponential_kernel())
    h = Bandwidth(h0, kappa).at(n)
    out = np.empty((reps, 2))
    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j, rep)))
        s = simulate(MODELS["m4"], f0, n, rng=rng)
        _, res = fit_residuals(s, 1)
        for i, k in enumerate(kernels):
            out[rep, i] = t_hat(res, k, h, f0, a) - simplified_mu(delta, k)
    return h, out


def asym_kernel_experiment(
    n_grid: Sequence[int] = (250, 500, 1000, 2000, 4000),
    reps: int = 200,
    seed: int = 0,
    *,
    h0: float = 0.14,
    kappa: float = 0.23,
    delta: float = 2.0,
    wiener_reps: int = 100_000,
    wiener_steps: int = 4096,
    mapper: Callable = map,
) -> AsymKernelReport:
    """Random walk M4 with N(0,1) innovations and ``a = 1/f0`` on ``[-delta, delta]``.

    Compares the ``sqrt(h)`` scaling (gaussian kernel, ``int K' = 0``) with
    the ``h`` scaling (exponential kernel, ``int K' = -1``) across ``n``,
    and the 0.95 quantile of the latter with the quantile of
    ``sigma^2 Z (int f^2 a) (int K')^2``.
    """
    grid = tuple(int(n) for n in n_grid)
    jobs = [(n, j, int(reps), seed, h0, kappa, delta) for j, n in enumerate(grid)]
    results = list(mapper(_asym_values, jobs))
    g, e_h, e_s, q95 = [], [], [], []
    for h, v in results:
        g.append(float(np.median(np.abs(v[:, 0]))) / math.sqrt(h))
        e_h.append(h * float(np.median(np.abs(v[:, 1]))))
        e_s.append(float(np.median(np.abs(v[:, 1]))) / math.sqrt(h))
        q95.append(float(np.quantile(h * v[:, 1], 0.95)))
    f0 = NoiseSpec.normal()
    f_mass = float(f0.cdf(delta) - f0.cdf(-delta))  # int f^2 a for a = 1/f on [-delta, delta]
    dk = exponential_kernel().deriv_integral
    scale = f0.variance * f_mass * dk * dk
    zq = wiener_functional_quantiles(wiener_reps, wiener_steps, seed, levels=(0.95,), mapper=mapper)[0.95]
    return AsymKernelReport(grid, tuple(g), tuple(e_h), tuple(e_s), tuple(q95), float(scale * zq), float(scale))
