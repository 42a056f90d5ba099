"""Likelihood-ratio estimators of the objective's gradient and Hessian.

For one trajectory the gradient estimate is ``sum_i Psi_i grad log pi(a_i|s_i)``
and the Hessian estimate is the symmetrised
``gradPhi gradlogp^T + sum_i Psi_i hess log pi(a_i|s_i)``. Batched versions
average over the first ``m`` (or ``b``) trajectories of a :class:`SampleBatch`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._dense import check_dense_allowed
from .exceptions import InvalidCount, InvalidInput
from .mdp import cost_to_go, psi
from .sampler import SampleBatch


@dataclass(frozen=True, eq=False)
class GradEstimate:
    vector: np.ndarray
    batch_size: int
    theta_snapshot: np.ndarray


@dataclass(frozen=True, eq=False)
class HessEstimate:
    matrix: np.ndarray
    batch_size: int
    theta_snapshot: np.ndarray


# ------------------------------------------------------------ single trajectory


def phi_grad(mdp, policy, theta, tau) -> np.ndarray:
    """Gradient estimate ``g(theta; tau)`` from one trajectory."""
    out = np.zeros(policy.dim)
    for i, (s, a) in enumerate(zip(tau.states, tau.actions)):
        out += psi(mdp, tau, i) * policy.grad_log_prob(theta, s, a)
    return out


def trajectory_score(policy, theta, tau) -> np.ndarray:
    """``grad log p(tau; theta)``, the sum of per-step scores."""
    out = np.zeros(policy.dim)
    for s, a in zip(tau.states, tau.actions):
        out += policy.grad_log_prob(theta, s, a)
    return out


def single_traj_hessian(mdp, policy, theta, tau) -> np.ndarray:
    """Symmetrised Hessian estimate ``H(theta; tau)`` from one trajectory."""
    check_dense_allowed("single_traj_hessian")
    g = phi_grad(mdp, policy, theta, tau)
    M = np.outer(g, trajectory_score(policy, theta, tau))
    for i, (s, a) in enumerate(zip(tau.states, tau.actions)):
        M += psi(mdp, tau, i) * policy.hess_log_prob(theta, s, a)
    return 0.5 * (M + M.T)


# ------------------------------------------------------------------- batched


def _check_count(batch: SampleBatch, k, what):
    if int(k) != k or not 1 <= k <= len(batch):
        raise InvalidCount(f"{what} must lie in [1, {len(batch)}], got {k}")
    if batch.mdp is None or batch.policy is None:
        raise InvalidInput("batch does not carry its MDP and policy")
    return int(k)


class _BlockTerms:
    """Per-step score blocks of a batch prefix.

    Holds arrays of shape (n, H) and (n, H, A) only; nothing is d-by-d.
    """

    def __init__(self, batch: SampleBatch, n: int):
        mdp, policy = batch.mdp, batch.policy
        theta = batch.theta_snapshot
        self.n = n
        self.A = policy.num_actions
        self.d = policy.dim
        self.visit = batch.states[:n, :-1]
        self.psi = cost_to_go(mdp, batch.states[:n], batch.actions[:n])
        self.scores = policy.score_blocks(theta, self.visit, batch.actions[:n])
        self.index = self.visit[..., None] * self.A + np.arange(self.A)
        self.curv = policy.curvature_blocks(theta)
        # weight on each state's curvature block: mean over trajectories of sum of Psi at visits
        self.state_weight = np.bincount(self.visit.ravel(), weights=self.psi.ravel(),
                                        minlength=policy.num_states) / n

    def scatter(self, per_step):
        """Sum ``per_step[j, h] * score[j, h]`` into a d-vector."""
        vals = per_step[..., None] * self.scores
        return np.bincount(self.index.ravel(), weights=vals.ravel(), minlength=self.d)

    def project(self, v):
        """Per-step inner products ``<score[j, h], v>``, shape (n, H)."""
        return np.einsum("jha,jha->jh", self.scores, v[self.index])

    def curvature_hvp(self, v):
        S = self.curv.shape[0]
        vb = v.reshape(S, self.A)
        return (self.state_weight[:, None] * np.einsum("sab,sb->sa", self.curv, vb)).ravel()


def batch_gradient(batch: SampleBatch, m: int) -> GradEstimate:
    """Average of the single-trajectory gradient estimates over the first ``m`` trajectories."""
    m = _check_count(batch, m, "gradient batch size")
    terms = _BlockTerms(batch, m)
    return GradEstimate(terms.scatter(terms.psi) / m, m, batch.theta_snapshot)


def batch_hessian(batch: SampleBatch, b: int) -> HessEstimate:
    """Average of the symmetrised single-trajectory Hessian estimates over the first ``b`` trajectories."""
    b = _check_count(batch, b, "Hessian batch size")
    check_dense_allowed("batch_hessian")
    terms = _BlockTerms(batch, b)
    d, A = terms.d, terms.A
    rows = np.repeat(np.arange(b), terms.visit.shape[1] * A)
    cols = terms.index.ravel()
    grad_phi = np.zeros((b, d))
    score = np.zeros((b, d))
    np.add.at(grad_phi, (rows, cols), (terms.psi[..., None] * terms.scores).ravel())
    np.add.at(score, (rows, cols), terms.scores.ravel())
    M = grad_phi.T @ score / b
    M = 0.5 * (M + M.T)
    for s in range(terms.curv.shape[0]):
        blk = slice(s * A, (s + 1) * A)
        M[blk, blk] += terms.state_weight[s] * terms.curv[s]
    return HessEstimate(M, b, batch.theta_snapshot)


class HvpHandle:
    """Matrix-free access ``v -> Hbar v`` for the Hessian estimate of a batch prefix.

    Each product costs O(b * H * A + d) time and never forms a d-by-d array.
    ``calls`` counts products issued, for auditing solvers.
    """

    def __init__(self, batch: SampleBatch, b: int):
        b = _check_count(batch, b, "Hessian batch size")
        self.batch_size = b
        self.theta_snapshot = batch.theta_snapshot
        self.dim = batch.policy.dim
        self._terms = _BlockTerms(batch, b)
        self.calls = 0

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise InvalidInput(f"vector must have shape ({self.dim},), got {v.shape}")
        self.calls += 1
        t = self._terms
        proj = t.project(v)
        score_dot = proj.sum(axis=1)            # grad log p . v
        phi_dot = (t.psi * proj).sum(axis=1)    # grad Phi . v
        per_step = 0.5 * (t.psi * score_dot[:, None] + phi_dot[:, None])
        return t.scatter(per_step) / t.n + t.curvature_hvp(v)

    matvec = __call__


def batch_hvp(batch: SampleBatch, b: int, v) -> np.ndarray:
    """``batch_hessian(batch, b).matrix @ v`` without forming the matrix."""
    return HvpHandle(batch, b)(v)


def per_trajectory_estimates(batch: SampleBatch, n: int | None = None, hessians: bool = True):
    """One-trajectory estimates for each of the first ``n`` trajectories.

    Returns
    -------
    grads : ndarray, shape (n, d)
    hessians : ndarray, shape (n, d, d), or None when ``hessians`` is False
    """
    n = _check_count(batch, len(batch) if n is None else n, "trajectory count")
    terms = _BlockTerms(batch, n)
    d, A = terms.d, terms.A
    rows = np.repeat(np.arange(n), terms.visit.shape[1] * A)
    cols = terms.index.ravel()
    grad_phi = np.zeros((n, d))
    score = np.zeros((n, d))
    np.add.at(grad_phi, (rows, cols), (terms.psi[..., None] * terms.scores).ravel())
    if not hessians:
        return grad_phi, None
    check_dense_allowed("per_trajectory_estimates")
    np.add.at(score, (rows, cols), terms.scores.ravel())
    M = np.einsum("jd,je->jde", grad_phi, score)
    M = 0.5 * (M + M.transpose(0, 2, 1))
    S = terms.curv.shape[0]
    w = np.zeros((n, S))
    np.add.at(w, (np.repeat(np.arange(n), terms.visit.shape[1]), terms.visit.ravel()), terms.psi.ravel())
    for s in range(S):
        blk = slice(s * A, (s + 1) * A)
        M[:, blk, blk] += w[:, s, None, None] * terms.curv[s]
    return grad_phi, M
