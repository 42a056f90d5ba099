"""Smoothness constants and iteration/batch schedules.

All counts are ceilings of closed-form expressions in the constants, the
target accuracy ``epsilon`` and the parameter dimension ``d``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .exceptions import InvalidInput


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidInput(f"{name} must be positive, got {value!r}")
    return value


def _dim(d):
    if int(d) != d or d < 1:
        raise InvalidInput(f"d must be a positive integer, got {d!r}")
    return int(d)


@dataclass(frozen=True)
class SmoothnessConstants:
    """Bounds and Lipschitz constants of the objective and its estimators.

    Attributes
    ----------
    K, G, L1, L2 : float
        Cost bound and the policy's score bound, curvature bound and
        curvature-Lipschitz constant.
    H : int
        Horizon.
    G_g : float
        Bound on the gradient norm, ``G K H^2``.
    M_Hess : float
        Lipschitz constant of the objective, ``K G H^3``.
    G_Hess : float
        Bound on the Hessian norm and Lipschitz constant of the gradient.
    L_Hess : float
        Lipschitz constant of the Hessian.
    M1, M2 : float
        Almost-sure deviation bounds of the one-trajectory gradient and
        Hessian estimates.
    """

    K: float
    G: float
    L1: float
    L2: float
    H: int
    G_g: float
    M_Hess: float
    G_Hess: float
    L_Hess: float
    M1: float
    M2: float

    def to_dict(self) -> dict:
        return asdict(self)


def compute_constants(K, G, L1, L2, H) -> SmoothnessConstants:
    for name, v in (("K", K), ("G", G), ("L1", L1), ("L2", L2)):
        _positive(name, v)
    if int(H) != H or H < 1:
        raise InvalidInput(f"H must be a positive integer, got {H!r}")
    H = int(H)
    G_g = G * K * H**2
    M_Hess = K * G * H**3
    G_Hess = H**3 * G**2 * K + L1 * K * H**2
    L_Hess = H**4 * G**3 * K + 3 * H**3 * G * L1 * K + L2 * K * H**2
    M1 = G * K * H**2 * (H + 1)
    return SmoothnessConstants(K, G, L1, L2, H, G_g, M_Hess, G_Hess, L_Hess, M1, 2 * G_Hess)


def constants_for(mdp, policy) -> SmoothnessConstants:
    """Constants from an MDP's cost bound and a policy's declared bounds."""
    # a cost-free MDP still needs a positive K for the formulas
    K = mdp.cost_bound if mdp.cost_bound > 0 else 1.0
    return compute_constants(K, policy.grad_bound, policy.hess_bound, policy.hess_lipschitz, mdp.horizon)


@dataclass(frozen=True)
class Schedule:
    """Per-iteration regulariser and batch sizes.

    ``alpha``, ``m`` and ``b`` are constant across iterations. For the
    high-probability mode ``delta_prime``, ``t`` and ``t1`` are set and
    ``failure_budget`` is ``2 N delta_prime``.
    """

    mode: str
    epsilon: float
    d: int
    alpha: float
    N: int
    m: int
    b: int
    delta_prime: float | None = None
    t: float | None = None
    t1: float | None = None
    failure_budget: float | None = None
    inner_iters: int | None = None

    def alpha_k(self, k: int) -> float:
        return self.alpha

    def to_dict(self) -> dict:
        return asdict(self)


def iteration_count(constants: SmoothnessConstants, epsilon: float) -> int:
    """``ceil(24 K H sqrt(L_Hess) / epsilon^1.5)``; the initial gap is bounded by ``2 K H``."""
    _positive("epsilon", epsilon)
    c = constants
    return max(1, math.ceil(24 * c.K * c.H * math.sqrt(c.L_Hess) / epsilon**1.5))


def schedule_expectation(constants: SmoothnessConstants, epsilon: float, d: int) -> Schedule:
    """Schedule whose guarantee holds in expectation."""
    _positive("epsilon", epsilon)
    d = _dim(d)
    c = constants
    m = math.ceil(25 * c.G_g**2 / (4 * epsilon**2))
    b = math.ceil(36 * (30 * (1 + 2 * math.log(2 * d))) ** (1 / 3) * d ** (2 / 3) * c.G_Hess**2 / epsilon)
    return Schedule("expectation", epsilon, d, 3 * c.L_Hess, iteration_count(c, epsilon), max(m, 1), max(b, 1))


def schedule_highprob(constants: SmoothnessConstants, epsilon: float, delta_prime: float, d: int) -> Schedule:
    """Schedule whose guarantee holds with probability ``1 - 2 N delta_prime``."""
    _positive("epsilon", epsilon)
    if not (isinstance(delta_prime, (int, float)) and 0 < delta_prime < 1):
        raise InvalidInput(f"delta_prime must lie in (0, 1), got {delta_prime!r}")
    d = _dim(d)
    c = constants
    t, t1 = 2 * epsilon / 5, epsilon / 144
    log_term = (8 / 3) * math.log(2 * d / delta_prime)
    m = math.ceil(max(c.M1 / t, c.M1**2 / t**2) * log_term)
    b = math.ceil(max(c.M2 / math.sqrt(t1), c.M2**2 / t1) * log_term)
    N = iteration_count(c, epsilon)
    return Schedule("high-probability", epsilon, d, 3 * c.L_Hess, N, max(m, 1), max(b, 1),
                    delta_prime=delta_prime, t=t, t1=t1, failure_budget=2 * N * delta_prime)


def schedule_approx(constants: SmoothnessConstants, epsilon: float, delta_prime: float, d: int,
                    c1: float = 1 / 300, c3: float = 1 / 200, c4: float = 1 / 200) -> Schedule:
    """Schedule for the Hessian-vector-product variant.

    ``alpha`` holds ``rho = L_Hess``; ``inner_iters`` is ``ceil(1/sqrt(epsilon))``.
    Batch sizes follow the high-probability guards with the absolute
    constants ``c1, c3, c4`` exposed as arguments.
    """
    _positive("epsilon", epsilon)
    if not (isinstance(delta_prime, (int, float)) and 0 < delta_prime < 1):
        raise InvalidInput(f"delta_prime must lie in (0, 1), got {delta_prime!r}")
    for name, v in (("c1", c1), ("c3", c3), ("c4", c4)):
        _positive(name, v)
    d = _dim(d)
    c = constants
    rho = c.L_Hess
    base = d * math.sqrt(rho) / (epsilon**1.5 * delta_prime)
    m = math.ceil(max(c.M1 / (c1 * epsilon), c.M1**2 / (c3**2 * epsilon**2)) * math.log(base / c3))
    b = math.ceil(max(c.M2 / (c4 * math.sqrt(rho * epsilon)), c.M2**2 / (c4**2 * rho * epsilon))
                  * math.log(base / c4))
    return Schedule("approximate", epsilon, d, rho, iteration_count(c, epsilon), max(m, 1), max(b, 1),
                    delta_prime=delta_prime, inner_iters=inner_iteration_count(epsilon))


def inner_iteration_count(epsilon: float) -> int:
    _positive("epsilon", epsilon)
    return math.ceil(1 / math.sqrt(epsilon))
