"""Seeded Monte Carlo simulation with counter-based substreams.

Trajectory ``i`` of a batch is a pure function of ``(master_seed, i)`` and the
simulation inputs: its uniforms come from a SplitMix64 sequence keyed by a hash
of the pair, so batches are prefix-stable and independent of thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidCount, InvalidInput
from .mdp import FiniteMdp, Trajectory

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1B54A32D192ED03)
_MASK64 = (1 << 64) - 1


def _mix64(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or int(seed) != seed or not 0 <= int(seed) <= _MASK64:
        raise InvalidInput(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def derive_seed(seed: int, *path: int) -> int:
    """Hash ``seed`` and a path of nonnegative integers to a new 64-bit seed."""
    z = np.array([check_seed(seed)], dtype=np.uint64)
    for p in path:
        step = np.array([int(p) & _MASK64], dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = _mix64(_mix64(z + _GOLDEN) + step * _STREAM)
    return int(z[0])


def stream_uniforms(master_seed: int, indices, count: int) -> np.ndarray:
    """Uniforms on [0, 1) for each substream index, shape ``(len(indices), count)``."""
    master = np.uint64(check_seed(master_seed))
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix64(_mix64(np.full(idx.shape, master) + _GOLDEN) ^ (idx * _STREAM))
        counters = key[:, None] + _GOLDEN * np.arange(1, count + 1, dtype=np.uint64)
    bits = _mix64(counters) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class Substream:
    master_seed: int
    index: int

    def uniforms(self, count: int) -> np.ndarray:
        return stream_uniforms(self.master_seed, [self.index], count)[0]


def _cdf(probs):
    cdf = np.cumsum(probs, axis=-1)
    cdf = cdf / cdf[..., -1:]
    cdf[..., -1] = 1.0
    return cdf


def _draw(cdf_rows, u):
    return np.minimum((u[:, None] >= cdf_rows).sum(axis=1), cdf_rows.shape[1] - 1)


def _simulate(mdp: FiniteMdp, pi: np.ndarray, U: np.ndarray):
    n, H = U.shape[0], mdp.horizon
    rho_cdf = _cdf(mdp.initial_dist[None, :])
    pi_cdf = _cdf(pi)
    P_cdf = _cdf(mdp.transition)
    states = np.empty((n, H + 1), dtype=np.int64)
    actions = np.empty((n, H), dtype=np.int64)
    states[:, 0] = _draw(np.broadcast_to(rho_cdf, (n, mdp.num_states)), U[:, 0])
    for h in range(H):
        s = states[:, h]
        a = _draw(pi_cdf[s], U[:, 1 + 2 * h])
        actions[:, h] = a
        states[:, h + 1] = _draw(P_cdf[s, a], U[:, 2 + 2 * h])
    return states, actions


def sample_trajectory(mdp: FiniteMdp, policy, theta, stream: Substream) -> Trajectory:
    """Simulate one episode from ``stream``: ``s_0 ~ rho``, ``a_h ~ pi``, ``s_{h+1} ~ P``."""
    U = stream.uniforms(2 * mdp.horizon + 1)[None, :]
    states, actions = _simulate(mdp, policy.probs(theta), U)
    return Trajectory(tuple(states[0]), tuple(actions[0]))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """A batch of trajectories stored as index arrays.

    Attributes
    ----------
    states : ndarray of int, shape (n, H+1)
    actions : ndarray of int, shape (n, H)
    master_seed : int
    theta_snapshot : ndarray, shape (d,)
    mdp, policy : the simulation inputs, kept so estimators can be formed
        from the batch alone.
    """

    states: np.ndarray
    actions: np.ndarray
    master_seed: int
    theta_snapshot: np.ndarray
    mdp: FiniteMdp | None = None
    policy: object = None

    def __len__(self):
        return self.states.shape[0]

    @property
    def trajectories(self) -> list:
        return [Trajectory(tuple(s), tuple(a)) for s, a in zip(self.states, self.actions)]

    def head(self, n: int) -> "SampleBatch":
        if not 1 <= n <= len(self):
            raise InvalidCount(f"count {n} outside [1, {len(self)}]")
        return SampleBatch(self.states[:n], self.actions[:n], self.master_seed,
                           self.theta_snapshot, self.mdp, self.policy)


def sample_batch(mdp: FiniteMdp, policy, theta, n: int, master_seed: int, n_jobs=None) -> SampleBatch:
    """Simulate ``n`` trajectories; trajectory ``i`` uses substream ``(master_seed, i)``.

    ``n_jobs`` splits the work over threads. Results land in index-addressed
    slots, so the output does not depend on it.
    """
    if int(n) != n or n < 1:
        raise InvalidCount(f"batch size must be a positive integer, got {n}")
    n = int(n)
    master_seed = check_seed(master_seed)
    theta = np.array(theta, dtype=float)
    pi = policy.probs(theta)
    width = 2 * mdp.horizon + 1
    states = np.empty((n, mdp.horizon + 1), dtype=np.int64)
    actions = np.empty((n, mdp.horizon), dtype=np.int64)

    def work(lo, hi):
        U = stream_uniforms(master_seed, np.arange(lo, hi), width)
        states[lo:hi], actions[lo:hi] = _simulate(mdp, pi, U)

    jobs = 1 if not n_jobs or n_jobs < 1 else int(n_jobs)
    if jobs == 1:
        work(0, n)
    else:
        bounds = np.linspace(0, n, jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, bounds[:-1], bounds[1:]))
    theta.setflags(write=False)
    return SampleBatch(states, actions, master_seed, theta, mdp, policy)


def batch_from_trajectories(mdp: FiniteMdp, policy, theta, trajectories, master_seed: int = 0) -> SampleBatch:
    """Wrap explicit trajectories as a batch (no sampling)."""
    trajectories = list(trajectories)
    if not trajectories:
        raise InvalidCount("need at least one trajectory")
    states = np.array([t.states for t in trajectories], dtype=np.int64)
    actions = np.array([t.actions for t in trajectories], dtype=np.int64)
    theta = np.array(theta, dtype=float)
    theta.setflags(write=False)
    return SampleBatch(states, actions, master_seed, theta, mdp, policy)
