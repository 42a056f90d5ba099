"""Oracle cross-checks for an enumerable fixture.

Each check returns a :class:`CheckOutcome` whose ``margin`` is nonnegative
exactly when it passes (tolerance or bound minus the worst observed value).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import per_trajectory_estimates
from .mdp import Trajectory, enumerate_arrays
from .oracle import exact_derivatives, finite_diff_grad, finite_diff_hess
from .policy import certify_bounds
from .sampler import batch_from_trajectories, derive_seed, sample_batch
from .schedule import constants_for

THETA_RANGE = 2.0


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: margin {self.margin:.3e}{'  ' + self.detail if self.detail else ''}"


def _outcome(name, bound, worst, detail=""):
    margin = float(bound - worst)
    return CheckOutcome(name, margin >= 0, margin, detail)


def _thetas(policy, count, seed, tag):
    rng = np.random.default_rng(derive_seed(seed, tag))
    return rng.uniform(-THETA_RANGE, THETA_RANGE, size=(count, policy.dim))


def check_bounds(policy, probe_count=2000, seed=0):
    rep = certify_bounds(policy, probe_count, derive_seed(seed, 1))
    pairs = (("G", rep.observed_grad, rep.declared_grad), ("L1", rep.observed_hess, rep.declared_hess),
             ("L2", rep.observed_lipschitz, rep.declared_lipschitz))
    worst = max(obs / dec for _, obs, dec in pairs)
    detail = "; ".join(rep.violations) or ", ".join(f"{k} {obs:.4g}/{dec:.4g}" for k, obs, dec in pairs)
    return CheckOutcome("certify_bounds", rep.passed, float(1.0 - worst), detail)


def check_finite_differences(mdp, policy, count=3, seed=0, step=1e-4, grad_tol=1e-7, hess_tol=1e-5):
    worst_g = worst_h = 0.0
    for theta in _thetas(policy, count, seed, 2):
        ex = exact_derivatives(mdp, policy, theta)
        worst_g = max(worst_g, np.abs(ex.gradient - finite_diff_grad(mdp, policy, theta, step)).max())
        fd = finite_diff_hess(mdp, policy, theta, step, source="value")
        worst_h = max(worst_h, np.abs(ex.hessian - fd).max())
    return [_outcome("gradient_vs_finite_difference", grad_tol, worst_g),
            _outcome("hessian_vs_finite_difference", hess_tol, worst_h)]


def check_unbiased(mdp, policy, count=3, seed=0, tol=1e-9):
    """Probability-weighted one-trajectory estimates summed over every trajectory."""
    states, actions, logw = enumerate_arrays(mdp)
    trajs = [(tuple(s), tuple(a)) for s, a in zip(states, actions)]
    worst_g = worst_h = 0.0
    for theta in _thetas(policy, count, seed, 3):
        batch = batch_from_trajectories(mdp, policy, theta, [Trajectory(s, a) for s, a in trajs])
        G, Hs = per_trajectory_estimates(batch)
        p = np.exp(logw + policy.log_probs(theta)[states[:, :-1], actions].sum(axis=1))
        ex = exact_derivatives(mdp, policy, theta)
        worst_g = max(worst_g, np.abs(p @ G - ex.gradient).max())
        worst_h = max(worst_h, np.abs(np.einsum("j,jde->de", p, Hs) - ex.hessian).max())
    return [_outcome("gradient_estimate_unbiased", tol, worst_g),
            _outcome("hessian_estimate_unbiased", tol, worst_h)]


def check_deviation(mdp, policy, count=3, n_traj=2000, seed=0):
    """Almost-sure bounds ``||g - grad J|| <= M1`` and ``||H - hess J|| <= M2``."""
    c = constants_for(mdp, policy)
    worst_g = worst_h = 0.0
    for i, theta in enumerate(_thetas(policy, count, seed, 4)):
        batch = sample_batch(mdp, policy, theta, n_traj, derive_seed(seed, 5, i))
        G, Hs = per_trajectory_estimates(batch)
        ex = exact_derivatives(mdp, policy, theta)
        worst_g = max(worst_g, np.linalg.norm(G - ex.gradient, axis=1).max())
        worst_h = max(worst_h, np.linalg.norm(Hs - ex.hessian, ord=2, axis=(1, 2)).max())
    return [_outcome("gradient_deviation_bound", c.M1, worst_g, f"M1={c.M1:.4g}"),
            _outcome("hessian_deviation_bound", c.M2, worst_h, f"M2={c.M2:.4g}")]


def check_smoothness(mdp, policy, pairs=50, seed=0):
    """Lipschitz bounds on value, gradient and Hessian plus the cubic Taylor bound."""
    c = constants_for(mdp, policy)
    rng = np.random.default_rng(derive_seed(seed, 6))
    worst = {"value": -np.inf, "gradient": -np.inf, "hessian": -np.inf, "taylor": -np.inf}
    for _ in range(pairs):
        t1 = rng.uniform(-THETA_RANGE, THETA_RANGE, policy.dim)
        t2 = t1 + rng.normal(size=policy.dim) * 10 ** rng.uniform(-2, 0.5)
        e1, e2 = exact_derivatives(mdp, policy, t1), exact_derivatives(mdp, policy, t2)
        dt = t1 - t2
        r = np.linalg.norm(dt)
        quad = e2.value + e2.gradient @ dt + 0.5 * dt @ e2.hessian @ dt
        # each entry is observed minus bound; the check passes while the max is <= 0
        worst["value"] = max(worst["value"], abs(e1.value - e2.value) - c.M_Hess * r)
        worst["gradient"] = max(worst["gradient"], np.linalg.norm(e1.gradient - e2.gradient) - c.G_Hess * r)
        worst["hessian"] = max(worst["hessian"], np.linalg.norm(e1.hessian - e2.hessian, 2) - c.L_Hess * r)
        worst["taylor"] = max(worst["taylor"], abs(e1.value - quad) - c.L_Hess / 6 * r**3)
    return [_outcome(f"lipschitz_{k}" if k != "taylor" else "cubic_taylor_bound", 0.0, v)
            for k, v in worst.items()]


def run_checks(mdp, policy, seed=0, probe_count=2000, n_theta=3, n_traj=2000, pairs=50):
    """All cross-checks in a fixed order; bound certification comes first."""
    out = [check_bounds(policy, probe_count, seed)]
    out += check_finite_differences(mdp, policy, n_theta, seed)
    out += check_unbiased(mdp, policy, n_theta, seed)
    out += check_deviation(mdp, policy, n_theta, n_traj, seed)
    out += check_smoothness(mdp, policy, pairs, seed)
    return out
