"""Least-squares fit of AR coefficients and the residual process."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .ar import TimeSeries
from .errors import ParameterError, SingularFitError

__all__ = [
    "OlsFit",
    "ResidualSet",
    "ols_estimate",
    "residuals",
    "fit_residuals",
    "regressors",
    "CONDITION_LIMIT",
]

CONDITION_LIMIT = 1e15


@dataclass(frozen=True)
class OlsFit:
    theta_hat: np.ndarray
    gram: np.ndarray
    condition_estimate: float


@dataclass(frozen=True)
class ResidualSet:
    """Residuals ``eps_hat_1, ..., eps_hat_n``; behaves like a 1-D array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def regressors(series: TimeSeries, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix with rows ``Phi_{t-1}^T`` and the response ``X_t``.

    Rows for which a lag falls before the recorded pre-sample are dropped.
    """
    x = series.values
    first = max(series.p, p)  # index of the first usable X_t
    m = x.size - first
    if m <= p:
        raise ParameterError(f"need more than p={p} usable observations, have {m}")
    design = np.empty((m, p))
    for j in range(p):
        design[:, j] = x[first - 1 - j : x.size - 1 - j]
    return design, x[first:]


def _scaled_lstsq(design, y):
    # column scaling leaves the solution unchanged but keeps QR well-balanced
    norms = np.sqrt(np.einsum("ij,ij->j", design, design))
    if not np.all(norms > 0) or not np.all(np.isfinite(norms)):
        raise SingularFitError("design matrix has a zero or non-finite column")
    q, r = np.linalg.qr(design / norms)
    sv = np.linalg.svd(r, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if not cond <= CONDITION_LIMIT:
        raise SingularFitError(f"ill-conditioned least-squares fit (condition {cond:.3g})", cond)
    sol = solve_triangular(r, q.T @ y) / norms
    if not np.all(np.isfinite(sol)):
        raise SingularFitError("non-finite least-squares solution", cond)
    return sol, cond


def ols_estimate(series: TimeSeries, p: int) -> OlsFit:
    """Least-squares estimate of ``theta`` for an AR(p) fit.

    The normal equations are never formed for solving: the design matrix is
    QR-factorized and the triangular system solved directly, which keeps
    explosive paths (Gram entries around 1e40) usable.

    Raises
    ------
    SingularFitError
        If the design is rank deficient or its condition number exceeds
        ``CONDITION_LIMIT``.
    """
    if p < 1:
        raise ParameterError("ols_estimate needs p >= 1")
    design, y = regressors(series, p)
    theta_hat, cond = _scaled_lstsq(design, y)
    return OlsFit(theta_hat, design.T @ design, cond)


def residuals(series: TimeSeries, theta_hat) -> ResidualSet:
    """``eps_hat_t = X_t - theta_hat^T Phi_{t-1}``; the raw path when p = 0."""
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    p = theta_hat.size
    if p == 0:
        return ResidualSet(series.observations.copy())
    if series.p < p:
        raise ParameterError(f"series carries {series.p} pre-sample values, fit needs {p}")
    design, y = regressors(series, p)
    res = y - design @ theta_hat
    return ResidualSet(res)


def _innovation_form(series: TimeSeries, p: int) -> bool:
    return (
        series.innovations is not None
        and series.theta is not None
        and len(series.theta) <= p
        and series.p >= len(series.theta)
    )


def fit_residuals(series: TimeSeries, p: int) -> tuple[OlsFit | None, ResidualSet]:
    """OLS fit of order ``p`` and its residuals.

    For simulated paths (innovations and generating ``theta`` known, fit
    order at least the true order) the fit is computed in error form:
    ``theta_hat - theta`` is the least-squares solution of ``eps`` on the
    design and ``eps_hat_t = eps_t - (theta_hat - theta)^T Phi_{t-1}``.
    This is algebraically the same fit, but avoids the cancellation in
    ``X_t - theta_hat^T Phi_{t-1}`` when ``|X_t|`` is so large (explosive
    paths) that its rounding error exceeds the innovation scale.
    Otherwise the direct form is used.  ``p = 0`` returns ``(None, X)``.
    """
    if p == 0:
        return None, residuals(series, ())
    if not _innovation_form(series, p):
        fit = ols_estimate(series, p)
        return fit, residuals(series, fit.theta_hat)
    design, _ = regressors(series, p)
    first = max(series.p, p)
    eps = np.asarray(series.innovations, dtype=float)[first - series.p :]
    err, cond = _scaled_lstsq(design, eps)
    theta = np.zeros(p)
    theta[: len(series.theta)] = series.theta
    fit = OlsFit(theta + err, design.T @ design, cond)
    return fit, ResidualSet(eps - design @ err)
