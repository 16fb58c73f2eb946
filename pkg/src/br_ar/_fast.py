"""Compiled kernel sums used by the density estimator on integration grids."""

import numpy as np
from numba import njit

GAUSSIAN = 0
SMOOTHED_UNIFORM = 1

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@njit(cache=True)
def _kernel_value(kind, u, eps, c):
    if kind == GAUSSIAN:
        return _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    au = abs(u)
    if au >= 1.0:
        return 0.0
    if au <= 1.0 - eps:
        return c
    v = (1.0 - au) / eps
    return c * v * v * v * (10.0 - 15.0 * v + 6.0 * v * v)


@njit(cache=True)
def window_sum(kind, eps, c, x, centers, h, lo, hi):
    """``sum_t K((x_i - e_t) / h)`` for sorted ``x`` and sorted ``centers``.

    Only centers with ``(x_i - e_t)/h`` in ``[lo, hi]`` are visited.
    """
    n = centers.size
    out = np.zeros(x.size)
    first = 0
    for i in range(x.size):
        xi = x[i]
        left = xi - hi * h
        right = xi - lo * h
        while first < n and centers[first] < left:
            first += 1
        s = 0.0
        j = first
        while j < n and centers[j] <= right:
            s += _kernel_value(kind, (xi - centers[j]) / h, eps, c)
            j += 1
        out[i] = s
    return out
