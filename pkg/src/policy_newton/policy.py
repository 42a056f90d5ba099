"""Differentiable tabular softmax policies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from ._dense import check_dense_allowed
from .exceptions import InvalidInput, InvalidProbeCount

PROBE_RANGE = 5.0


@dataclass(frozen=True)
class TabularSoftmaxPolicy:
    """Softmax policy with one logit per state-action pair.

    The parameter vector is laid out as ``theta[s * A + a]``. The declared
    bounds are the constants ``G``, ``L1`` and ``L2`` that bound the norm of the
    score, the norm of its Jacobian and the Lipschitz constant of that
    Jacobian; :func:`certify_bounds` checks them empirically.
    """

    num_states: int
    num_actions: int
    grad_bound: float = math.sqrt(2.0)
    hess_bound: float = 1.0
    hess_lipschitz: float = 2.0

    @property
    def dim(self) -> int:
        return self.num_states * self.num_actions

    @classmethod
    def for_mdp(cls, mdp, **bounds):
        return cls(mdp.num_states, mdp.num_actions, **bounds)

    def _table(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise InvalidInput(f"theta must have shape ({self.dim},), got {theta.shape}")
        return theta.reshape(self.num_states, self.num_actions)

    def _check(self, s, a):
        if not 0 <= s < self.num_states:
            raise IndexError(f"state {s} out of range [0, {self.num_states})")
        if not 0 <= a < self.num_actions:
            raise IndexError(f"action {a} out of range [0, {self.num_actions})")

    def probs(self, theta) -> np.ndarray:
        """Action probabilities, shape (S, A)."""
        return softmax(self._table(theta), axis=1)

    def log_probs(self, theta) -> np.ndarray:
        table = self._table(theta)
        return table - logsumexp(table, axis=1, keepdims=True)

    def log_prob(self, theta, s, a) -> float:
        self._check(s, a)
        row = self._table(theta)[s]
        return float(row[a] - logsumexp(row))

    def grad_log_prob(self, theta, s, a) -> np.ndarray:
        self._check(s, a)
        pi = softmax(self._table(theta)[s])
        out = np.zeros(self.dim)
        block = slice(s * self.num_actions, (s + 1) * self.num_actions)
        out[block] = -pi
        out[s * self.num_actions + a] += 1.0
        return out

    def hess_log_prob(self, theta, s, a) -> np.ndarray:
        """Hessian of ``log pi(a|s)``; only block ``(s, s)`` is nonzero and it does not depend on ``a``."""
        self._check(s, a)
        check_dense_allowed("hess_log_prob")
        out = np.zeros((self.dim, self.dim))
        block = slice(s * self.num_actions, (s + 1) * self.num_actions)
        out[block, block] = self.curvature_blocks(theta)[s]
        return out

    # batched helpers used by the estimators

    def score_blocks(self, theta, states, actions) -> np.ndarray:
        """Nonzero block of ``grad log pi(a|s)`` for each (s, a) pair.

        ``states`` and ``actions`` share a shape; the result has one extra
        trailing axis of length ``A``.
        """
        pi = self.probs(theta)
        return np.eye(self.num_actions)[actions] - pi[states]

    def curvature_blocks(self, theta) -> np.ndarray:
        """``-diag(pi_s) + pi_s pi_s^T`` for each state, shape (S, A, A)."""
        pi = self.probs(theta)
        return pi[:, :, None] * pi[:, None, :] - pi[:, :, None] * np.eye(self.num_actions)

    def greedy_actions(self, theta) -> np.ndarray:
        return np.argmax(self._table(theta), axis=1)


@dataclass(frozen=True)
class BoundReport:
    observed_grad: float
    observed_hess: float
    observed_lipschitz: float
    declared_grad: float
    declared_hess: float
    declared_lipschitz: float
    probe_count: int

    @property
    def violations(self) -> list:
        out = []
        if self.observed_grad > self.declared_grad:
            out.append(f"G: observed {self.observed_grad:.6g} > declared {self.declared_grad:.6g}")
        if self.observed_hess > self.declared_hess:
            out.append(f"L1: observed {self.observed_hess:.6g} > declared {self.declared_hess:.6g}")
        if self.observed_lipschitz > self.declared_lipschitz:
            out.append(f"L2: observed {self.observed_lipschitz:.6g} > declared {self.declared_lipschitz:.6g}")
        return out

    @property
    def passed(self) -> bool:
        return not self.violations


def certify_bounds(policy: TabularSoftmaxPolicy, probe_count: int, rng_seed=None) -> BoundReport:
    """Probe the declared regularity constants of ``policy``.

    Draws ``probe_count`` tuples ``(theta, theta', s, a)``: ``theta`` is
    uniform on ``[-5, 5]^d`` and ``theta'`` sits at a log-uniform distance in
    ``[1e-3, 10]`` in a random direction, so difference quotients see both
    local and global variation. Records the largest score norm, score
    Jacobian norm and Jacobian difference quotient seen.
    """
    if probe_count < 1:
        raise InvalidProbeCount(f"probe_count must be >= 1, got {probe_count}")
    rng = np.random.default_rng(rng_seed)
    d, A = policy.dim, policy.num_actions
    g_max = h_max = l_max = 0.0
    for _ in range(probe_count):
        theta = rng.uniform(-PROBE_RANGE, PROBE_RANGE, d)
        direction = rng.standard_normal(d)
        other = theta + direction / np.linalg.norm(direction) * 10.0 ** rng.uniform(-3, 1)
        s = int(rng.integers(policy.num_states))
        a = int(rng.integers(A))
        # score and curvature live on block s only; norms of the block equal full norms
        score = policy.score_blocks(theta, np.array([s]), np.array([a]))[0]
        c1 = policy.curvature_blocks(theta)[s]
        c2 = policy.curvature_blocks(other)[s]
        g_max = max(g_max, float(np.linalg.norm(score)))
        h_max = max(h_max, float(np.linalg.norm(c1, 2)))
        dist = float(np.linalg.norm(theta - other))
        if dist > 0:
            l_max = max(l_max, float(np.linalg.norm(c1 - c2, 2)) / dist)
    return BoundReport(g_max, h_max, l_max, policy.grad_bound, policy.hess_bound,
                       policy.hess_lipschitz, probe_count)
