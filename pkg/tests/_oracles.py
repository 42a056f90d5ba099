"""Independent reference computations used by the tests."""

import math

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def _grid_min(g0, g1, h00, h01, h11, alpha, lo, step, n):
    best_rows = np.empty(n)
    arg_rows = np.empty((n, 2))
    for i in prange(n):
        x = lo + i * step
        best = np.inf
        by = 0.0
        for j in range(n):
            y = lo + j * step
            r = math.sqrt(x * x + y * y)
            v = g0 * x + g1 * y + 0.5 * (h00 * x * x + 2.0 * h01 * x * y + h11 * y * y) + alpha / 6.0 * r * r * r
            if v < best:
                best = v
                by = y
        best_rows[i] = best
        arg_rows[i, 0] = x
        arg_rows[i, 1] = by
    k = np.argmin(best_rows)
    return best_rows[k], arg_rows[k]


def grid_minimum_2d(g, H, alpha, half_width=5.0, step=1e-3):
    """Brute-force minimum of the 2-D cubic model over a square grid."""
    n = int(round(2 * half_width / step)) + 1
    return _grid_min(float(g[0]), float(g[1]), float(H[0, 0]), float(H[0, 1]), float(H[1, 1]),
                     float(alpha), -half_width, step, n)


def cubic_value(g, H, alpha, delta):
    delta = np.asarray(delta, dtype=float)
    return float(g @ delta + 0.5 * delta @ H @ delta + alpha / 6.0 * np.linalg.norm(delta) ** 3)


def random_model_2d(rng):
    A = rng.uniform(-3, 3, (2, 2))
    H = np.triu(A) + np.triu(A, 1).T
    g = rng.uniform(-3, 3, 2)
    alpha = float(rng.choice([1.0, 3.0, 10.0]))
    return g, H, alpha
