"""Outer loops: exact cubic Newton, its Hessian-vector-product variant, and a
plain likelihood-ratio gradient baseline.

Every run is a pure function of its inputs and ``seed``. Iteration ``k`` samples
with master seed ``derive_seed(seed, k)``; solver noise and the output-index
draw use further derived seeds.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._dense import forbid_dense_hessian
from .cubic import CubicModel, cubic_finalsolver, cubic_subsolver, solve_exact, subsolver_branch
from .estimator import HvpHandle, batch_gradient, batch_hessian
from .exceptions import InvalidInput, NumericalFailure
from .oracle import exact_value, is_eps_sosp
from .sampler import check_seed, derive_seed, sample_batch
from .schedule import (constants_for, inner_iteration_count, schedule_approx,
                       schedule_expectation, schedule_highprob)

CSV_COLUMNS = ("iter", "J_oracle", "grad_norm_est", "step_norm", "delta_J", "m_k", "b_k", "wall_ms")
# oracle J is recorded per iteration only when enumeration is this cheap
ORACLE_TRACE_CAP = 10**5
DECREASE_TOL = 1e-10

CRPN_OVERRIDES = frozenset({"m", "b", "N", "alpha"})
ACRPN_OVERRIDES = frozenset({"m", "b", "N", "rho", "l", "inner_iters", "c_prime"})

_OUTPUT_INDEX_STREAM = 0  # iterations use streams 1..N


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


@dataclass
class IterationRecord:
    iter: int
    J_oracle: float | None
    grad_norm_est: float
    step_norm: float
    delta_J: float
    m_k: int
    b_k: int
    wall_ms: float | None = None
    solver_kind: str = ""
    hess_min_eig_est: float | None = None
    decrease_slack: float | None = None

    def row(self) -> list:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


@dataclass
class RunReport:
    """Trace and outcome of one optimisation run.

    Attributes
    ----------
    algorithm : {"crpn", "acrpn", "reinforce"}
    records : list of IterationRecord
    output_index : int
        ``R``; the returned iterate is ``theta_R`` (0 means ``theta0``).
    theta_out : ndarray
        The returned parameter (``theta_R``, or the early-exit point).
    iterates : list of ndarray
        ``theta_0 .. theta_last``.
    overrides : dict
        Schedule entries replaced for a scaled-down run; empty for a full run.
    """

    algorithm: str
    mode: str
    seed: int
    epsilon: float | None
    schedule: dict
    constants: dict
    overrides: dict
    records: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    output_index: int = 0
    theta_out: np.ndarray | None = None
    early_exit: bool = False
    certificate: dict | None = None

    @property
    def total_trajectories(self) -> int:
        return int(sum(max(r.m_k, r.b_k) for r in self.records))

    @property
    def theta_final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def scaled(self) -> bool:
        return bool(self.overrides)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow(r.row())
        return buf.getvalue()

    def summary(self) -> dict:
        return _jsonable({
            "algorithm": self.algorithm,
            "mode": self.mode,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "iterations": len(self.records),
            "output_index": self.output_index,
            "theta_out": self.theta_out,
            "theta_final": self.theta_final,
            "early_exit": self.early_exit,
            "total_trajectories": self.total_trajectories,
            "schedule": self.schedule,
            "overrides": self.overrides,
            "constants": self.constants,
            "sosp_certificate": self.certificate,
        })

    def summary_text(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir, stem: str = "run") -> tuple:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace, summary = out / f"{stem}_trace.csv", out / f"{stem}_summary.json"
        trace.write_text(self.csv_text())
        summary.write_text(self.summary_text())
        return trace, summary


def _check_overrides(overrides, allowed):
    overrides = dict(overrides or {})
    unknown = set(overrides) - allowed
    if unknown:
        raise InvalidInput(f"unknown override(s): {sorted(unknown)}; allowed {sorted(allowed)}")
    for k, v in overrides.items():
        if not (isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0):
            raise InvalidInput(f"override {k} must be positive, got {v!r}")
        if k in ("m", "b", "N", "inner_iters") and int(v) != v:
            raise InvalidInput(f"override {k} must be an integer, got {v!r}")
    return overrides


def _check_theta(policy, theta0):
    theta = np.zeros(policy.dim) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != (policy.dim,) or not np.all(np.isfinite(theta)):
        raise InvalidInput(f"theta0 must be a finite vector of length {policy.dim}")
    return theta


def _check_epsilon(epsilon):
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and epsilon > 0):
        raise InvalidInput("epsilon must be positive")
    return float(epsilon)


def _tracker(mdp, policy, enabled):
    if enabled is None:
        enabled = mdp.trajectory_space_size() <= ORACLE_TRACE_CAP
    if not enabled:
        return lambda theta: None
    return lambda theta: exact_value(mdp, policy, theta)


def _certify(report, mdp, policy, epsilon, rho, enabled):
    if enabled is None:
        enabled = mdp.trajectory_space_size() <= ORACLE_TRACE_CAP
    if enabled and epsilon is not None:
        cert = is_eps_sosp(mdp, policy, report.theta_out, epsilon, rho)
        report.certificate = {
            "exact": True, "passed": cert.passed, "grad_norm": cert.grad_norm,
            "lambda_min": cert.lambda_min, "epsilon": cert.epsilon, "rho": cert.rho,
            "gradient_margin": cert.gradient_margin, "curvature_margin": cert.curvature_margin,
        }


def draw_output_index(alphas, seed: int) -> int:
    """Draw ``R`` in ``1..N`` with probability proportional to ``alphas[R-1]``."""
    w = np.asarray(alphas, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w <= 0):
        raise InvalidInput("alphas must be a nonempty positive vector")
    rng = np.random.default_rng(derive_seed(seed, _OUTPUT_INDEX_STREAM))
    return int(rng.choice(w.size, p=w / w.sum())) + 1


def run_crpn(mdp, policy, theta0=None, epsilon=0.1, mode="expectation", seed=0, overrides=None,
             delta_prime=0.01, n_jobs=None, oracle=None, timing=False) -> RunReport:
    """Cubic-regularised policy Newton with exact subproblem solves.

    Each iteration simulates ``max(m, b)`` trajectories at the current
    parameter, estimates the gradient from the first ``m`` and the Hessian
    from the first ``b``, and moves by the global minimiser of the cubic
    model with weight ``alpha``.

    Parameters
    ----------
    mode : {"expectation", "high-probability"}
    overrides : dict, optional
        Replacement values for ``m``, ``b``, ``N`` or ``alpha``.
    oracle : bool, optional
        Record exact ``J`` per iteration and certify the output. Defaults to
        on when enumeration is cheap.
    timing : bool
        Fill the ``wall_ms`` column. Off by default so reruns are byte-identical.
    """
    epsilon = _check_epsilon(epsilon)
    seed = check_seed(seed)
    overrides = _check_overrides(overrides, CRPN_OVERRIDES)
    theta = _check_theta(policy, theta0)
    const = constants_for(mdp, policy)
    if mode == "expectation":
        sched = schedule_expectation(const, epsilon, policy.dim)
    elif mode == "high-probability":
        sched = schedule_highprob(const, epsilon, delta_prime, policy.dim)
    else:
        raise InvalidInput(f"mode must be 'expectation' or 'high-probability', got {mode!r}")
    m, b, N = (int(overrides.get(k, getattr(sched, k))) for k in ("m", "b", "N"))
    alpha = float(overrides.get("alpha", sched.alpha))
    J_of = _tracker(mdp, policy, oracle)

    report = RunReport("crpn", mode, seed, epsilon, sched.to_dict(), const.to_dict(), overrides,
                       iterates=[theta.copy()])
    alphas = []
    for k in range(1, N + 1):
        t0 = time.perf_counter()
        batch = sample_batch(mdp, policy, theta, max(m, b), derive_seed(seed, k), n_jobs=n_jobs)
        g = batch_gradient(batch, m).vector
        Hbar = batch_hessian(batch, b).matrix
        model = CubicModel(g, Hbar, alpha)
        try:
            sol = solve_exact(model)
        except NumericalFailure as exc:
            raise NumericalFailure(f"iteration {k}: {exc}") from exc
        theta = theta + sol.delta
        wall = (time.perf_counter() - t0) * 1e3 if timing else None
        step = sol.step_norm
        report.records.append(IterationRecord(
            k, J_of(theta), float(np.linalg.norm(g)), step, sol.model_value, m, b, wall,
            sol.solver_kind, float(np.linalg.eigvalsh(Hbar)[0]),
            sol.model_value + alpha / 12.0 * step**3,
        ))
        report.iterates.append(theta.copy())
        alphas.append(alpha)
    report.output_index = draw_output_index(alphas, seed)
    report.theta_out = report.iterates[report.output_index]
    _certify(report, mdp, policy, epsilon, const.L_Hess, oracle)
    return report


def run_acrpn(mdp, policy, theta0=None, epsilon=0.1, seed=0, overrides=None, delta_prime=0.01,
              n_jobs=None, oracle=None, timing=False, c1=1 / 300, c3=1 / 200, c4=1 / 200) -> RunReport:
    """Cubic-regularised policy Newton using only Hessian-vector products.

    Each iteration takes an approximate cubic step with ``rho = L_Hess`` and
    ``l = G_Hess``. Once the step's model decrease is smaller than
    ``sqrt(epsilon^3 / rho) / 100`` the model is solved to accuracy
    ``epsilon / 2`` from the previous iterate and that point is returned.
    If this never happens the last iterate is returned.

    The loop runs with dense Hessian construction disabled, so any attempt
    to form a d-by-d estimate raises :class:`DenseHessianForbidden`.
    """
    epsilon = _check_epsilon(epsilon)
    seed = check_seed(seed)
    overrides = _check_overrides(overrides, ACRPN_OVERRIDES)
    theta = _check_theta(policy, theta0)
    const = constants_for(mdp, policy)
    sched = schedule_approx(const, epsilon, delta_prime, policy.dim, c1=c1, c3=c3, c4=c4)
    m, b, N = (int(overrides.get(k, getattr(sched, k))) for k in ("m", "b", "N"))
    rho = float(overrides.get("rho", const.L_Hess))
    l = float(overrides.get("l", const.G_Hess))
    inner = int(overrides.get("inner_iters", inner_iteration_count(epsilon)))
    c_prime = float(overrides.get("c_prime", 0.1))
    threshold = -math.sqrt(epsilon**3 / rho) / 100.0
    J_of = _tracker(mdp, policy, oracle)

    report = RunReport("acrpn", "approximate", seed, epsilon, sched.to_dict(), const.to_dict(), overrides,
                       iterates=[theta.copy()])
    with forbid_dense_hessian():
        for k in range(1, N + 1):
            t0 = time.perf_counter()
            batch = sample_batch(mdp, policy, theta, max(m, b), derive_seed(seed, k), n_jobs=n_jobs)
            g = batch_gradient(batch, m).vector
            model = CubicModel(g, HvpHandle(batch, b), rho, l)
            kind = subsolver_branch(model)
            delta, delta_J = cubic_subsolver(model, epsilon, inner, rng=derive_seed(seed, k, 1), c_prime=c_prime)
            if delta_J >= threshold:
                delta = cubic_finalsolver(model, epsilon)
                delta_J = float(model.g @ delta + 0.5 * delta @ model.hvp(delta)
                                + rho / 6.0 * np.linalg.norm(delta) ** 3)
                kind, report.early_exit = "finalsolver", True
            theta = theta + delta
            wall = (time.perf_counter() - t0) * 1e3 if timing else None
            report.records.append(IterationRecord(
                k, J_of(theta), float(np.linalg.norm(g)), float(np.linalg.norm(delta)), float(delta_J),
                m, b, wall, kind,
            ))
            report.iterates.append(theta.copy())
            if report.early_exit:
                break
    report.output_index = len(report.records)
    report.theta_out = report.iterates[-1]
    _certify(report, mdp, policy, epsilon, const.L_Hess, oracle)
    return report


def run_reinforce(mdp, policy, theta0=None, step_size=0.1, iters=50, batch=100, seed=0,
                  n_jobs=None, oracle=None, timing=False, epsilon=None) -> RunReport:
    """Gradient descent with the likelihood-ratio gradient estimate.

    ``theta_k = theta_{k-1} - step_size * g_k`` with a fresh batch of
    ``batch`` trajectories per iteration. Returns the last iterate.
    """
    if not (isinstance(step_size, (int, float)) and math.isfinite(step_size) and step_size >= 0):
        raise InvalidInput(f"step_size must be nonnegative, got {step_size!r}")
    for name, v in (("iters", iters), ("batch", batch)):
        if int(v) != v or v < 1:
            raise InvalidInput(f"{name} must be a positive integer, got {v!r}")
    if epsilon is not None:
        epsilon = _check_epsilon(epsilon)
    seed = check_seed(seed)
    theta = _check_theta(policy, theta0)
    const = constants_for(mdp, policy)
    J_of = _tracker(mdp, policy, oracle)
    sched = {"step_size": step_size, "N": int(iters), "m": int(batch)}
    report = RunReport("reinforce", "gradient", seed, epsilon, sched, const.to_dict(), {},
                       iterates=[theta.copy()])
    for k in range(1, int(iters) + 1):
        t0 = time.perf_counter()
        sample = sample_batch(mdp, policy, theta, int(batch), derive_seed(seed, k), n_jobs=n_jobs)
        g = batch_gradient(sample, int(batch)).vector
        delta = -step_size * g
        theta = theta + delta
        wall = (time.perf_counter() - t0) * 1e3 if timing else None
        report.records.append(IterationRecord(
            k, J_of(theta), float(np.linalg.norm(g)), float(np.linalg.norm(delta)), None,
            int(batch), 0, wall, "gradient",
        ))
        report.iterates.append(theta.copy())
    report.output_index = len(report.records)
    report.theta_out = report.iterates[-1]
    _certify(report, mdp, policy, epsilon, const.L_Hess, oracle)
    return report
