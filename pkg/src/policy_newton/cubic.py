"""Cubic-regularised quadratic models and their solvers.

The model is ``m(D) = <g, D> + 1/2 <H D, D> + (alpha/6) ||D||^3``. The exact
solver finds the global minimiser through an eigendecomposition of ``H`` and a
one-dimensional secular equation in the step length. The approximate solvers
only touch ``H`` through Hessian-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .exceptions import InvalidInput, MaxIterExceeded, NumericalFailure
from .linalg import min_eigenvalue, min_eigenvalue_iterative

EXACT_DIM_CAP = 2000
FINALSOLVER_MAX_ITER = 10**6
STATIONARITY_TOL = 1e-8
_SECULAR_TOL = 1e-12
# g components below this fraction of ||g|| on the bottom eigenspace count as zero
_HARD_CASE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CubicModel:
    """Local cubic model.

    Parameters
    ----------
    g : ndarray, shape (d,)
    hess : ndarray of shape (d, d) or callable
        Dense symmetric matrix, or a function returning ``H @ v``.
    alpha : float
        Cubic regularisation weight (``rho`` in the approximate solvers).
    lipschitz_l : float, optional
        Gradient-Lipschitz constant; sets the step size of the approximate solvers.
    """

    g: np.ndarray
    hess: Union[np.ndarray, Callable]
    alpha: float
    lipschitz_l: float | None = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 1 or not np.all(np.isfinite(g)):
            raise InvalidInput("g must be a finite vector")
        if not self.alpha > 0:
            raise InvalidInput(f"alpha must be positive, got {self.alpha}")
        if self.lipschitz_l is not None and not self.lipschitz_l > 0:
            raise InvalidInput(f"lipschitz_l must be positive, got {self.lipschitz_l}")
        object.__setattr__(self, "g", g)
        if not callable(self.hess):
            H = np.asarray(self.hess, dtype=float)
            if H.shape != (g.size, g.size):
                raise InvalidInput(f"Hessian shape {H.shape} does not match g of length {g.size}")
            object.__setattr__(self, "hess", H)

    @property
    def dim(self) -> int:
        return self.g.size

    @property
    def is_dense(self) -> bool:
        return not callable(self.hess)

    def hvp(self, v) -> np.ndarray:
        return self.hess @ v if self.is_dense else np.asarray(self.hess(v), dtype=float)

    def gradient(self, delta) -> np.ndarray:
        """Gradient of the model at ``delta``."""
        return self.g + self.hvp(delta) + 0.5 * self.alpha * np.linalg.norm(delta) * delta


@dataclass(frozen=True, eq=False)
class CubicSolution:
    delta: np.ndarray
    model_value: float
    stationarity_residual: float
    curvature_margin: float
    solver_kind: str

    @property
    def step_norm(self) -> float:
        return float(np.linalg.norm(self.delta))


@dataclass(frozen=True)
class StepReport:
    stationarity_residual: float
    curvature_margin: float

    def ok(self, residual_tol: float, margin_tol: float = -1e-8) -> bool:
        return self.stationarity_residual <= residual_tol and self.curvature_margin >= margin_tol


def _check_delta(model, delta):
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (model.dim,):
        raise InvalidInput(f"step must have shape ({model.dim},), got {delta.shape}")
    return delta


def model_value(model: CubicModel, delta) -> float:
    delta = _check_delta(model, delta)
    r = np.linalg.norm(delta)
    return float(model.g @ delta + 0.5 * delta @ model.hvp(delta) + model.alpha / 6.0 * r**3)


def verify_step(model: CubicModel, delta) -> StepReport:
    """Residuals of the global-minimiser conditions at ``delta``.

    ``stationarity_residual`` is ``||g + H D + (alpha/2)||D|| D||`` and
    ``curvature_margin`` is ``lambda_min(H) + (alpha/2)||D||``; a global
    minimiser has the first at zero and the second nonnegative.
    """
    delta = _check_delta(model, delta)
    r = float(np.linalg.norm(delta))
    residual = float(np.linalg.norm(model.gradient(delta)))
    if model.is_dense:
        lam, _ = min_eigenvalue(0.5 * (model.hess + model.hess.T))
    else:
        lam, _ = min_eigenvalue_iterative(model.hvp, model.dim)
    return StepReport(residual, lam + 0.5 * model.alpha * r)


def _bottom_direction(V):
    v = V[:, 0].copy()
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def solve_exact(model: CubicModel, dim_cap: int = EXACT_DIM_CAP, max_iter: int = 2000) -> CubicSolution:
    """Global minimiser of a cubic model with dense Hessian.

    Solves ``||(H + (alpha/2) r I)^{-1} g|| = r`` for the shift
    ``s = lambda_min + (alpha/2) r > 0`` rather than for ``r``, so that roots
    very close to the bottom eigenvalue do not lose precision to cancellation.
    The iteration is a bracketed Newton method that falls back to bisection.
    In the hard case (``g`` orthogonal to the bottom eigenspace and no
    interior root) the step is completed along the bottom eigenvector whose
    first nonzero coordinate is positive.
    """
    if not model.is_dense:
        raise InvalidInput("solve_exact needs a dense Hessian")
    if model.dim > dim_cap:
        raise InvalidInput(f"dimension {model.dim} exceeds exact-solver cap {dim_cap}")
    H = 0.5 * (model.hess + model.hess.T)
    g, a = model.g, 0.5 * model.alpha
    lam, Q = np.linalg.eigh(H)
    scale = max(1.0, float(np.abs(lam).max()))
    lam0 = float(lam[0])
    if abs(lam0) <= 8 * np.finfo(float).eps * scale:
        lam0 = 0.0  # eigensolver round-off, not curvature
    gap = np.maximum(lam - lam0, 0.0)
    gt = Q.T @ g
    gnorm = float(np.linalg.norm(g))
    r_min = max(0.0, -lam0 / a)

    bottom = gap <= 1e-12 * scale
    negligible = np.abs(gt) <= _HARD_CASE_TOL * gnorm
    if gnorm == 0.0 or np.all(negligible[bottom]):
        # candidate hard case: drop g on the bottom eigenspace
        keep = ~bottom
        rest = np.zeros_like(gt)
        if r_min > 0 or gnorm == 0.0:
            rest[keep] = -gt[keep] / (gap[keep] + a * r_min + lam0) if keep.any() else 0.0
            rest_norm = float(np.linalg.norm(rest))
            if rest_norm <= r_min:
                tau = np.sqrt(max(r_min**2 - rest_norm**2, 0.0))
                delta = Q @ rest + tau * _bottom_direction(Q[:, bottom])
                return _finish(model, H, delta, "exact")

    # shift s = lam0 + a r; the step is -gt / (gap + s) and r(s) = (s - lam0) / a
    def secular(s):
        step = -gt / (gap + s)
        n = float(np.linalg.norm(step))
        return n - (s - lam0) / a, n, step

    lo = max(0.0, lam0)
    hi = lam0 + a * (np.sqrt(2.0 * gnorm / model.alpha) + 2.0 * scale / model.alpha)
    hi = max(hi, lo + 1e-300)
    while secular(hi)[0] > 0:
        hi = 2.0 * hi + 1.0
    s = hi
    for _ in range(max_iter):
        f, n, step = secular(s)
        # a * f * step is exactly the stationarity residual of this step
        if a * abs(f) * max(n, 1.0) <= _SECULAR_TOL * max(1.0, gnorm):
            break
        if f > 0:
            lo = s
        else:
            hi = s
        # d/ds ||step(s)|| = -sum(gt^2 / (gap + s)^3) / ||step||
        dn = -float(np.sum(gt**2 / (gap + s) ** 3)) / n if n > 0 else 0.0
        newton = s - f / (dn - 1.0 / a)
        s = newton if lo < newton < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return _finish(model, H, Q @ (-gt / (gap + s)), "exact")


def _finish(model, H, delta, kind):
    r = float(np.linalg.norm(delta))
    residual = float(np.linalg.norm(model.g + H @ delta + 0.5 * model.alpha * r * delta))
    lam = np.linalg.eigvalsh(H)
    lam0 = float(lam[0])
    # below this the residual is rounding in the products H delta and r delta
    floor = 16 * model.dim * np.finfo(float).eps * r * (float(np.abs(lam).max()) + model.alpha * r)
    if residual > max(STATIONARITY_TOL * max(1.0, float(np.linalg.norm(model.g))), floor):
        raise NumericalFailure(
            f"cubic step stationarity residual {residual:.3g} above tolerance; "
            "the model may be ill-conditioned"
        )
    return CubicSolution(delta, model_value(model, delta), residual,
                         lam0 + 0.5 * model.alpha * r, kind)


def _require_l(model):
    if model.lipschitz_l is None:
        raise InvalidInput("approximate solvers need lipschitz_l")
    return model.lipschitz_l


def cubic_subsolver(model: CubicModel, epsilon: float, inner_iters: int, rng=None,
                    c_prime: float = 0.1) -> tuple:
    """One approximate cubic step using only Hessian-vector products.

    With ``rho = model.alpha`` and ``l = model.lipschitz_l``: if
    ``||g|| >= l^2 / rho`` take the Cauchy step along ``-g``; otherwise run
    ``inner_iters`` gradient steps of size ``1/(20 l)`` on the model with the
    linear term perturbed by ``c' sqrt(epsilon rho) / l`` times a uniform unit
    vector.

    Returns
    -------
    delta : ndarray
    delta_J : float
        Model value at ``delta`` (with the unperturbed gradient).
    """
    l = _require_l(model)
    rho = model.alpha
    g = model.g
    gnorm = float(np.linalg.norm(g))
    if gnorm >= l * l / rho:
        Hg = model.hvp(g)
        beta = float(g @ Hg) / (rho * gnorm**2)
        radius = -beta + np.sqrt(beta**2 + 2.0 * gnorm / rho)
        delta = -radius * g / gnorm
    else:
        rng = np.random.default_rng(rng)
        sigma = c_prime * np.sqrt(epsilon * rho) / l
        eta = 1.0 / (20.0 * l)
        zeta = rng.standard_normal(model.dim)
        zeta /= np.linalg.norm(zeta)
        g_pert = g + sigma * zeta
        delta = np.zeros(model.dim)
        for _ in range(int(inner_iters)):
            delta = delta - eta * (g_pert + model.hvp(delta) + 0.5 * rho * np.linalg.norm(delta) * delta)
    return delta, model_value(model, delta)


def subsolver_branch(model: CubicModel) -> str:
    """Which branch :func:`cubic_subsolver` takes for ``model``."""
    l = _require_l(model)
    return "subsolver-cauchy" if np.linalg.norm(model.g) >= l * l / model.alpha else "subsolver-gd"


def cubic_finalsolver(model: CubicModel, epsilon: float, max_iter: int = FINALSOLVER_MAX_ITER) -> np.ndarray:
    """Gradient descent on the model until its gradient norm drops below ``epsilon / 2``."""
    l = _require_l(model)
    rho = model.alpha
    eta = 1.0 / (20.0 * l)
    delta = np.zeros(model.dim)
    grad = model.g.copy()
    it = 0
    while np.linalg.norm(grad) >= epsilon / 2.0:
        if it >= max_iter:
            raise MaxIterExceeded(
                f"final solver did not reach ||grad|| < {epsilon / 2:.3g} in {max_iter} steps "
                f"(last {np.linalg.norm(grad):.3g})"
            )
        delta = delta - eta * grad
        grad = model.g + model.hvp(delta) + 0.5 * rho * np.linalg.norm(delta) * delta
        it += 1
    return delta
