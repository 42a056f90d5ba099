"""Finite-horizon tabular MDPs, trajectories and cost bookkeeping.

Costs are discounted with ``gamma**h`` for the step index ``h = 0 .. H-1``
everywhere in the package (trajectory cost, cost-to-go, exact objective).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .exceptions import CapExceeded, InvalidInput

DEFAULT_ENUMERATION_CAP = 10**7
_ATOL = 1e-12

FIXTURE_KEYS = (
    "num_states",
    "num_actions",
    "horizon",
    "discount",
    "cost_bound",
    "transition",
    "cost",
    "initial_dist",
)


def _frozen(arr):
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FiniteMdp:
    """Tabular finite-horizon MDP.

    Parameters
    ----------
    transition : array-like, shape (S, A, S)
        ``transition[s, a, s2]`` is the probability of moving to ``s2``.
    cost : array-like, shape (S, A)
    initial_dist : array-like, shape (S,)
    horizon : int
        Number of decisions per episode.
    discount : float, default=1.0
    cost_bound : float, optional
        Declared bound ``K`` on ``|cost|``. Defaults to ``max |cost|``.

    Notes
    -----
    Construction only checks shapes. Use :func:`validate_mdp` for the
    probabilistic invariants.
    """

    transition: np.ndarray
    cost: np.ndarray
    initial_dist: np.ndarray
    horizon: int
    discount: float = 1.0
    cost_bound: float | None = None
    num_states: int = field(init=False)
    num_actions: int = field(init=False)

    def __post_init__(self):
        P = _frozen(self.transition)
        c = _frozen(self.cost)
        rho = _frozen(self.initial_dist)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise InvalidInput(f"transition must have shape (S, A, S), got {P.shape}")
        S, A = P.shape[0], P.shape[1]
        if c.shape != (S, A):
            raise InvalidInput(f"cost must have shape ({S}, {A}), got {c.shape}")
        if rho.shape != (S,):
            raise InvalidInput(f"initial_dist must have shape ({S},), got {rho.shape}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise InvalidInput(f"horizon must be a positive integer, got {self.horizon}")
        K = float(np.max(np.abs(c))) if self.cost_bound is None else float(self.cost_bound)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "initial_dist", rho)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "cost_bound", K)
        object.__setattr__(self, "num_states", S)
        object.__setattr__(self, "num_actions", A)

    @property
    def discounts(self) -> np.ndarray:
        """``gamma**h`` for ``h = 0 .. H-1``."""
        return self.discount ** np.arange(self.horizon, dtype=float)

    def trajectory_space_size(self) -> int:
        """Upper bound ``S * (A*S)**H`` on the number of trajectories."""
        return self.num_states * (self.num_actions * self.num_states) ** self.horizon

    def __eq__(self, other):
        if not isinstance(other, FiniteMdp):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.discount == other.discount
            and self.cost_bound == other.cost_bound
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.cost, other.cost)
            and np.array_equal(self.initial_dist, other.initial_dist)
        )

    __hash__ = None


@dataclass(frozen=True)
class Trajectory:
    """One episode ``(s_0, a_0, ..., a_{H-1}, s_H)``."""

    states: tuple
    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))
        if len(self.states) != len(self.actions) + 1:
            raise InvalidInput(
                f"trajectory needs len(states) == len(actions) + 1, got "
                f"{len(self.states)} and {len(self.actions)}"
            )

    @property
    def horizon(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    index: tuple | None = None
    message: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            extra = f" at {c.index}: {c.message}" if not c.passed else ""
            lines.append(f"[{status}] {c.name}{extra}")
        return "\n".join(lines)


def _first_index(mask):
    idx = np.argwhere(mask)
    return tuple(int(i) for i in idx[0]) if len(idx) else None


def validate_mdp(mdp: FiniteMdp) -> ValidationReport:
    """Check every :class:`FiniteMdp` invariant and report the first violation of each."""
    P, c, rho = mdp.transition, mdp.cost, mdp.initial_dist
    checks = []

    idx = _first_index(~np.isfinite(P) | (P < 0))
    checks.append(CheckResult("transition nonnegative", idx is None, idx,
                              "negative or non-finite transition probability"))
    row_sums = P.sum(axis=2)
    idx = _first_index(np.abs(row_sums - 1.0) > _ATOL)
    msg = "" if idx is None else f"row sum != 1 (got {float(row_sums[idx])!r})"
    checks.append(CheckResult("transition rows sum to 1", idx is None, idx, msg))

    idx = _first_index(~np.isfinite(rho) | (rho < 0))
    checks.append(CheckResult("initial_dist nonnegative", idx is None, idx,
                              "negative or non-finite initial probability"))
    total = float(rho.sum())
    ok = abs(total - 1.0) <= _ATOL
    checks.append(CheckResult("initial_dist sums to 1", ok, None if ok else (),
                              "" if ok else f"sum != 1 (got {total!r})"))

    idx = _first_index(~np.isfinite(c) | (np.abs(c) > mdp.cost_bound))
    msg = "" if idx is None else f"cost bound violated: |{float(c[idx])!r}| > K={mdp.cost_bound!r}"
    checks.append(CheckResult("cost bound", idx is None, idx, msg))

    ok = 0.0 < mdp.discount <= 1.0
    checks.append(CheckResult("discount in (0, 1]", ok, None if ok else (),
                              "" if ok else f"discount {mdp.discount!r}"))
    return ValidationReport(tuple(checks))


def check_trajectory(mdp: FiniteMdp, tau: Trajectory) -> None:
    if tau.horizon != mdp.horizon:
        raise InvalidInput(f"trajectory horizon {tau.horizon} != MDP horizon {mdp.horizon}")
    if any(not 0 <= s < mdp.num_states for s in tau.states):
        raise InvalidInput(f"state index out of range in {tau.states}")
    if any(not 0 <= a < mdp.num_actions for a in tau.actions):
        raise InvalidInput(f"action index out of range in {tau.actions}")


def trajectory_log_prob(mdp: FiniteMdp, policy, theta, tau: Trajectory) -> float:
    """Log-probability of ``tau`` under the policy at ``theta``.

    Returns ``-inf`` when any factor is exactly zero.
    """
    check_trajectory(mdp, tau)
    theta = np.asarray(theta, dtype=float)
    rho0 = mdp.initial_dist[tau.states[0]]
    if rho0 <= 0:
        return -math.inf
    total = math.log(rho0)
    for h, a in enumerate(tau.actions):
        s, s_next = tau.states[h], tau.states[h + 1]
        p = mdp.transition[s, a, s_next]
        if p <= 0:
            return -math.inf
        total += math.log(p) + policy.log_prob(theta, s, a)
    return float(total)


def discounted_cost(mdp: FiniteMdp, tau: Trajectory) -> float:
    check_trajectory(mdp, tau)
    return psi(mdp, tau, 0)


def psi(mdp: FiniteMdp, tau: Trajectory, i: int) -> float:
    """Discounted cost-to-go ``sum_{h >= i} gamma**h c(s_h, a_h)``."""
    if not 0 <= i < mdp.horizon:
        raise IndexError(f"step index {i} outside [0, {mdp.horizon})")
    total = 0.0
    for h in range(mdp.horizon - 1, i - 1, -1):
        total += mdp.discount**h * mdp.cost[tau.states[h], tau.actions[h]]
    return float(total)


def cost_to_go(mdp: FiniteMdp, states, actions) -> np.ndarray:
    """Vectorised cost-to-go for a batch.

    Parameters
    ----------
    states : ndarray of int, shape (n, H+1)
    actions : ndarray of int, shape (n, H)

    Returns
    -------
    ndarray, shape (n, H)
        Entry ``[j, i]`` is the cost-to-go from step ``i`` of trajectory ``j``.
    """
    step_cost = mdp.cost[states[:, :-1], actions] * mdp.discounts
    return np.cumsum(step_cost[:, ::-1], axis=1)[:, ::-1]


def enumerate_arrays(mdp: FiniteMdp, cap: int = DEFAULT_ENUMERATION_CAP):
    """All structurally possible trajectories as arrays.

    Returns
    -------
    states : ndarray of int, shape (n, H+1)
    actions : ndarray of int, shape (n, H)
    log_weight : ndarray, shape (n,)
        ``log rho(s_0) + sum_h log P(s_{h+1} | s_h, a_h)``, the
        policy-independent part of the trajectory log-probability.
    """
    if mdp.trajectory_space_size() > cap:
        raise CapExceeded(
            f"trajectory space S*(A*S)^H = {mdp.trajectory_space_size()} exceeds cap {cap}"
        )
    S, A, H = mdp.num_states, mdp.num_actions, mdp.horizon
    P = mdp.transition
    starts = np.flatnonzero(mdp.initial_dist > 0)
    states = starts[:, None]
    actions = np.zeros((len(starts), 0), dtype=int)
    logw = np.log(mdp.initial_dist[starts])
    for _ in range(H):
        s = states[:, -1]
        # (n, A, S) candidate extensions
        probs = P[s]
        j, a, s2 = np.nonzero(probs > 0)
        states = np.concatenate([states[j], s2[:, None]], axis=1)
        actions = np.concatenate([actions[j], a[:, None]], axis=1)
        logw = logw[j] + np.log(probs[j, a, s2])
    return states.astype(int), actions.astype(int), logw


def enumerate_trajectories(mdp: FiniteMdp, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator:
    """Yield ``(Trajectory, structural_weight)`` for every supported trajectory.

    ``structural_weight`` is ``rho(s_0) * prod_h P(s_{h+1} | s_h, a_h)``; the
    trajectory probability is this weight times the policy factors.
    """
    states, actions, logw = enumerate_arrays(mdp, cap)
    for st, ac, lw in zip(states, actions, logw):
        yield Trajectory(tuple(st), tuple(ac)), float(np.exp(lw))


# ---------------------------------------------------------------- fixture files


def mdp_to_dict(mdp: FiniteMdp) -> dict:
    return {
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "horizon": mdp.horizon,
        "discount": mdp.discount,
        "cost_bound": mdp.cost_bound,
        "transition": mdp.transition.ravel().tolist(),
        "cost": mdp.cost.ravel().tolist(),
        "initial_dist": mdp.initial_dist.tolist(),
    }


def mdp_from_dict(doc: dict) -> FiniteMdp:
    unknown = set(doc) - set(FIXTURE_KEYS)
    if unknown:
        raise InvalidInput(f"unknown fixture keys: {sorted(unknown)}")
    missing = [k for k in FIXTURE_KEYS if k not in doc]
    if missing:
        raise InvalidInput(f"missing fixture keys: {missing}")
    S, A = int(doc["num_states"]), int(doc["num_actions"])
    trans = np.asarray(doc["transition"], dtype=float)
    cost = np.asarray(doc["cost"], dtype=float)
    if trans.size != S * A * S:
        raise InvalidInput(f"transition has {trans.size} entries, expected {S * A * S}")
    if cost.size != S * A:
        raise InvalidInput(f"cost has {cost.size} entries, expected {S * A}")
    return FiniteMdp(
        transition=trans.reshape(S, A, S),
        cost=cost.reshape(S, A),
        initial_dist=doc["initial_dist"],
        horizon=doc["horizon"],
        discount=doc["discount"],
        cost_bound=doc["cost_bound"],
    )


def save_mdp(mdp: FiniteMdp, path) -> None:
    """Write the JSON fixture format. Floats are written with ``repr`` so reloads are bit-exact."""
    with open(path, "w") as fh:
        json.dump(mdp_to_dict(mdp), fh, indent=2)
        fh.write("\n")


def load_mdp(path) -> FiniteMdp:
    if not os.path.exists(path):
        raise FileNotFoundError(f"MDP fixture not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
    return mdp_from_dict(doc)
