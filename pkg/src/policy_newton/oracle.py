"""Exact objective, gradient and Hessian by trajectory enumeration.

This module deliberately builds dense per-trajectory scores rather than
reusing the estimator's block arithmetic, so the two routes check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInput
from .linalg import min_eigenvalue, min_eigenvalue_iterative  # noqa: F401
from .mdp import DEFAULT_ENUMERATION_CAP, enumerate_arrays


@dataclass(frozen=True, eq=False)
class ExactDerivatives:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    trajectory_count: int


def _enumerated(mdp, policy, theta, cap):
    states, actions, logw = enumerate_arrays(mdp, cap)
    logpi = policy.log_probs(theta)
    logp = logw + logpi[states[:, :-1], actions].sum(axis=1)
    return states, actions, np.exp(logp)


def exact_value(mdp, policy, theta, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """``J(theta)``: probability-weighted discounted cost over all trajectories."""
    states, actions, p = _enumerated(mdp, policy, np.asarray(theta, float), cap)
    costs = (mdp.cost[states[:, :-1], actions] * mdp.discounts).sum(axis=1)
    return float(p @ costs)


def exact_derivatives(mdp, policy, theta, cap: int = DEFAULT_ENUMERATION_CAP) -> ExactDerivatives:
    theta = np.asarray(theta, dtype=float)
    states, actions, p = _enumerated(mdp, policy, theta, cap)
    n, H = actions.shape
    d = policy.dim
    step_cost = mdp.cost[states[:, :-1], actions] * mdp.discounts
    to_go = np.flip(np.cumsum(np.flip(step_cost, 1), axis=1), 1)

    scores = np.zeros((n, H, d))
    for h in range(H):
        for j in range(n):
            scores[j, h] = policy.grad_log_prob(theta, states[j, h], actions[j, h])
    grad_phi = np.einsum("jh,jhd->jd", to_go, scores)
    grad_logp = scores.sum(axis=1)

    value = float(p @ step_cost.sum(axis=1))
    gradient = p @ grad_phi
    outer = np.einsum("j,jd,je->de", p, grad_phi, grad_logp)
    # sum over trajectories of p * sum_h Psi_h * hess log pi(a_h|s_h)
    curv = np.zeros((d, d))
    weight = np.zeros(mdp.num_states)
    np.add.at(weight, states[:, :-1], p[:, None] * to_go)
    for s in range(mdp.num_states):
        if weight[s] != 0.0:
            curv += weight[s] * policy.hess_log_prob(theta, s, 0)
    hessian = 0.5 * (outer + outer.T) + curv
    return ExactDerivatives(value, gradient, hessian, n)


def finite_diff_grad(mdp, policy, theta, step: float = 1e-4, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Central differences of the exact objective."""
    if step <= 0:
        raise InvalidInput(f"step must be positive, got {step}")
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        out[i] = (exact_value(mdp, policy, theta + e, cap) - exact_value(mdp, policy, theta - e, cap)) / (2 * step)
    return out


def finite_diff_hess(mdp, policy, theta, step: float = 1e-4, source: str = "gradient",
                     cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Central-difference Hessian.

    ``source="gradient"`` differences the exact gradient column by column and
    symmetrises; ``source="value"`` uses second differences of the objective
    alone, which shares no derivative code with :func:`exact_derivatives`.
    """
    if step <= 0:
        raise InvalidInput(f"step must be positive, got {step}")
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    eye = np.eye(d) * step
    out = np.empty((d, d))
    if source == "gradient":
        for j in range(d):
            plus = exact_derivatives(mdp, policy, theta + eye[j], cap).gradient
            minus = exact_derivatives(mdp, policy, theta - eye[j], cap).gradient
            out[:, j] = (plus - minus) / (2 * step)
        return 0.5 * (out + out.T)
    if source != "value":
        raise InvalidInput(f"unknown source {source!r}")

    def J(x):
        return exact_value(mdp, policy, x, cap)

    for i in range(d):
        for j in range(i, d):
            v = (J(theta + eye[i] + eye[j]) - J(theta + eye[i] - eye[j])
                 - J(theta - eye[i] + eye[j]) + J(theta - eye[i] - eye[j])) / (4 * step * step)
            out[i, j] = out[j, i] = v
    return out


@dataclass(frozen=True)
class SospCertificate:
    passed: bool
    grad_norm: float
    lambda_min: float
    epsilon: float
    rho: float

    @property
    def gradient_margin(self) -> float:
        """``epsilon - ||grad J||``; nonnegative when the first-order test passes."""
        return self.epsilon - self.grad_norm

    @property
    def curvature_margin(self) -> float:
        """``lambda_min + sqrt(rho * epsilon)``; nonnegative when the second-order test passes."""
        return self.lambda_min + float(np.sqrt(self.rho * self.epsilon))


def certify_sosp(grad_norm: float, lambda_min: float, epsilon: float, rho: float) -> SospCertificate:
    if epsilon <= 0 or rho <= 0:
        raise InvalidInput("epsilon and rho must be positive")
    ok = grad_norm <= epsilon and lambda_min >= -np.sqrt(rho * epsilon)
    return SospCertificate(bool(ok), float(grad_norm), float(lambda_min), float(epsilon), float(rho))


def is_eps_sosp(mdp, policy, theta, epsilon: float, rho: float,
                cap: int = DEFAULT_ENUMERATION_CAP) -> SospCertificate:
    """Exact second-order stationarity test at ``theta``.

    Passes iff ``||grad J|| <= epsilon`` and ``lambda_min(hess J) >= -sqrt(rho * epsilon)``.
    """
    if epsilon <= 0 or rho <= 0:
        raise InvalidInput("epsilon and rho must be positive")
    ex = exact_derivatives(mdp, policy, theta, cap)
    lam, _ = min_eigenvalue(ex.hessian)
    return certify_sosp(float(np.linalg.norm(ex.gradient)), lam, epsilon, rho)
