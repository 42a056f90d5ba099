"""scikit-learn style wrappers around the optimisation loops.

``fit`` takes an MDP (or a builtin name, fixture path or fixture dict) in
place of ``X``. After fitting, ``predict`` maps states to greedy actions and
``predict_proba`` to action distributions; ``score`` is ``-J`` so that
larger is better, as sklearn expects.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .driver import run_acrpn, run_crpn, run_reinforce
from .oracle import exact_value
from .policy import TabularSoftmaxPolicy
from .validation import check_mdp, check_states, check_theta


class _PolicyEstimator(BaseEstimator):

    def _policy_for(self, mdp):
        return TabularSoftmaxPolicy(mdp.num_states, mdp.num_actions, self.grad_bound,
                                    self.hess_bound, self.hess_lipschitz)

    def fit(self, X, y=None, theta0=None):
        """Optimise the policy on MDP ``X`` from ``theta0`` (zeros by default)."""
        mdp = check_mdp(X)
        policy = self._policy_for(mdp)
        theta0 = check_theta(theta0, policy.dim, "theta0")
        self.report_ = self._run(mdp, policy, theta0)
        self.mdp_ = mdp
        self.policy_ = policy
        self.theta_ = np.array(self.report_.theta_out)
        self.n_iter_ = len(self.report_.records)
        return self

    def _check_fitted(self):
        if not hasattr(self, "theta_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def predict_proba(self, states):
        self._check_fitted()
        return self.policy_.probs(self.theta_)[check_states(states, self.mdp_.num_states)]

    def predict(self, states):
        self._check_fitted()
        return self.policy_.greedy_actions(self.theta_)[check_states(states, self.mdp_.num_states)]

    def score(self, X=None, y=None):
        """Negative exact expected cost of the fitted policy on ``X`` (default: the training MDP)."""
        self._check_fitted()
        mdp = self.mdp_ if X is None else check_mdp(X)
        return -exact_value(mdp, self._policy_for(mdp), self.theta_)


class CubicPolicyNewton(_PolicyEstimator):
    """Cubic-regularised policy Newton with exact cubic steps.

    Parameters
    ----------
    epsilon : float
        Target accuracy; sets the schedule.
    mode : {"expectation", "high-probability"}
    delta_prime : float
        Per-iteration failure probability for the high-probability schedule.
    m, b, n_iter, alpha : optional
        Overrides for the gradient batch, Hessian batch, iteration count and
        cubic weight. ``None`` keeps the schedule value.
    seed : int
    n_jobs : int, optional
        Sampling threads; results do not depend on it.
    grad_bound, hess_bound, hess_lipschitz : float
        Declared policy bounds feeding the smoothness constants.
    """

    def __init__(self, epsilon=0.1, mode="expectation", delta_prime=0.01, m=None, b=None, n_iter=None,
                 alpha=None, seed=0, n_jobs=None, grad_bound=math.sqrt(2.0), hess_bound=1.0,
                 hess_lipschitz=2.0):
        self.epsilon = epsilon
        self.mode = mode
        self.delta_prime = delta_prime
        self.m = m
        self.b = b
        self.n_iter = n_iter
        self.alpha = alpha
        self.seed = seed
        self.n_jobs = n_jobs
        self.grad_bound = grad_bound
        self.hess_bound = hess_bound
        self.hess_lipschitz = hess_lipschitz

    def _run(self, mdp, policy, theta0):
        ov = {k: v for k, v in (("m", self.m), ("b", self.b), ("N", self.n_iter), ("alpha", self.alpha))
              if v is not None}
        return run_crpn(mdp, policy, theta0, self.epsilon, self.mode, self.seed, ov,
                        delta_prime=self.delta_prime, n_jobs=self.n_jobs)


class ApproxCubicPolicyNewton(_PolicyEstimator):
    """Cubic-regularised policy Newton using Hessian-vector products only.

    ``rho`` and ``l`` default to the Hessian-Lipschitz and gradient-Lipschitz
    constants; ``inner_iters`` defaults to ``ceil(1/sqrt(epsilon))``.
    """

    def __init__(self, epsilon=0.1, delta_prime=0.01, m=None, b=None, n_iter=None, rho=None, l=None,
                 inner_iters=None, c_prime=None, seed=0, n_jobs=None, grad_bound=math.sqrt(2.0),
                 hess_bound=1.0, hess_lipschitz=2.0):
        self.epsilon = epsilon
        self.delta_prime = delta_prime
        self.m = m
        self.b = b
        self.n_iter = n_iter
        self.rho = rho
        self.l = l
        self.inner_iters = inner_iters
        self.c_prime = c_prime
        self.seed = seed
        self.n_jobs = n_jobs
        self.grad_bound = grad_bound
        self.hess_bound = hess_bound
        self.hess_lipschitz = hess_lipschitz

    def _run(self, mdp, policy, theta0):
        pairs = (("m", self.m), ("b", self.b), ("N", self.n_iter), ("rho", self.rho), ("l", self.l),
                 ("inner_iters", self.inner_iters), ("c_prime", self.c_prime))
        ov = {k: v for k, v in pairs if v is not None}
        return run_acrpn(mdp, policy, theta0, self.epsilon, self.seed, ov,
                         delta_prime=self.delta_prime, n_jobs=self.n_jobs)


class ReinforcePolicyGradient(_PolicyEstimator):
    """Fixed-step gradient descent on the likelihood-ratio gradient estimate."""

    def __init__(self, step_size=0.1, n_iter=50, batch_size=100, seed=0, n_jobs=None,
                 grad_bound=math.sqrt(2.0), hess_bound=1.0, hess_lipschitz=2.0):
        self.step_size = step_size
        self.n_iter = n_iter
        self.batch_size = batch_size
        self.seed = seed
        self.n_jobs = n_jobs
        self.grad_bound = grad_bound
        self.hess_bound = hess_bound
        self.hess_lipschitz = hess_lipschitz

    def _run(self, mdp, policy, theta0):
        return run_reinforce(mdp, policy, theta0, self.step_size, self.n_iter, self.batch_size,
                             self.seed, n_jobs=self.n_jobs)
