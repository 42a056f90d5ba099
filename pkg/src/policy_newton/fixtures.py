"""Builtin MDP fixtures."""

import numpy as np

from .mdp import FiniteMdp


def chain2() -> FiniteMdp:
    """Two states, two actions, horizon 2.

    Action 0 keeps the state and action 1 flips it; every action costs 1 in
    state 0 and 0 in state 1; episodes start in state 0.
    """
    P = np.zeros((2, 2, 2))
    for s in range(2):
        P[s, 0, s] = 1.0
        P[s, 1, 1 - s] = 1.0
    cost = np.array([[1.0, 1.0], [0.0, 0.0]])
    return FiniteMdp(P, cost, [1.0, 0.0], horizon=2, discount=1.0, cost_bound=1.0)


def saddle3() -> FiniteMdp:
    """Three states whose objective has a strict saddle at ``theta = 0``.

    States 0 and 1 are each a start state with probability 1/2. In either
    one, action 0 stays and action 1 moves to the absorbing, cost-free state
    2. With ``p = pi(0|0)`` and ``q = pi(0|1)`` the objective is

        J = 1/2 (1 - p/2)(1 + p) + 1/2 (-1 + q/2)(1 + q),

    concave in ``p`` and convex in ``q`` with both stationary at 1/2. The
    exact Hessian at zero has eigenvalues -1/16, +1/16 and four zeros.
    """
    P = np.zeros((3, 2, 3))
    P[0, 0, 0] = 1.0
    P[0, 1, 2] = 1.0
    P[1, 0, 1] = 1.0
    P[1, 1, 2] = 1.0
    P[2, :, 2] = 1.0
    cost = np.array([[0.5, 1.0], [-0.5, -1.0], [0.0, 0.0]])
    return FiniteMdp(P, cost, [0.5, 0.5, 0.0], horizon=2, discount=1.0, cost_bound=1.0)


def zero_cost(num_states=2, num_actions=2, horizon=2) -> FiniteMdp:
    """Uniform random-walk dynamics with zero cost."""
    P = np.full((num_states, num_actions, num_states), 1.0 / num_states)
    rho = np.full(num_states, 1.0 / num_states)
    return FiniteMdp(P, np.zeros((num_states, num_actions)), rho, horizon=horizon, cost_bound=1.0)


def random_mdp(num_states, num_actions, horizon, seed=0, discount=1.0) -> FiniteMdp:
    """Dense random dynamics and costs in [-1, 1]."""
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    cost = rng.uniform(-1.0, 1.0, size=(num_states, num_actions))
    rho = rng.dirichlet(np.ones(num_states))
    return FiniteMdp(P, cost, rho, horizon=horizon, discount=discount, cost_bound=1.0)


BUILTINS = {
    "chain2": chain2,
    "saddle3": saddle3,
    "zero_cost": zero_cost,
}
