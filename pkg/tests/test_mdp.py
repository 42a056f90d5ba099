import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from policy_newton.exceptions import CapExceeded, InvalidInput
from policy_newton.fixtures import chain2, random_mdp, zero_cost
from policy_newton.mdp import (FiniteMdp, Trajectory, discounted_cost, enumerate_trajectories, load_mdp,
                               mdp_from_dict, mdp_to_dict, psi, save_mdp, trajectory_log_prob, validate_mdp)
from policy_newton.policy import TabularSoftmaxPolicy

STAY_STAY = Trajectory((0, 0, 0), (0, 0))


def _failed(report):
    return [c.name for c in report.failures()]


def test_chain2_validates(chain):
    report = validate_mdp(chain)
    assert report.passed, str(report)
    assert np.allclose(chain.transition.sum(axis=2), 1.0)


def test_bad_row_sum_is_reported():
    P = np.zeros((2, 1, 2))
    P[0, 0] = [0.5, 0.6]
    P[1, 0] = [0.0, 1.0]
    report = validate_mdp(FiniteMdp(P, np.zeros((2, 1)), [1, 0], horizon=1))
    assert _failed(report) == ["transition rows sum to 1"]
    assert "row sum != 1" in str(report)


def test_cost_bound_violation_is_reported(chain):
    cost = np.array([[2.0, 1.0], [0.0, 0.0]])
    report = validate_mdp(FiniteMdp(chain.transition, cost, chain.initial_dist, 2, cost_bound=1.0))
    assert _failed(report) == ["cost bound"]


def test_bad_shapes_raise():
    with pytest.raises(InvalidInput):
        FiniteMdp(np.ones((2, 2, 3)), np.zeros((2, 2)), [1, 0], 1)
    with pytest.raises(InvalidInput):
        FiniteMdp(np.full((2, 2, 2), 0.5), np.zeros((2, 2)), [1, 0], 0)


def test_log_prob_deterministic_policy_limit():
    P = np.zeros((1, 1, 1))
    P[0, 0, 0] = 1.0
    mdp = FiniteMdp(P, np.zeros((1, 1)), [1.0], horizon=3)
    pol = TabularSoftmaxPolicy(1, 1)
    assert trajectory_log_prob(mdp, pol, np.zeros(1), Trajectory((0,) * 4, (0,) * 3)) == 0.0


def test_log_prob_chain2_uniform(chain):
    pol = TabularSoftmaxPolicy.for_mdp(chain)
    for tau, _ in enumerate_trajectories(chain):
        assert trajectory_log_prob(chain, pol, np.zeros(4), tau) == pytest.approx(math.log(0.25), abs=1e-12)


def test_log_prob_impossible_transition(chain):
    pol = TabularSoftmaxPolicy.for_mdp(chain)
    assert trajectory_log_prob(chain, pol, np.zeros(4), Trajectory((0, 1, 1), (0, 0))) == -math.inf


def test_discounted_cost_examples(chain, zero):
    assert discounted_cost(zero, Trajectory((0, 1, 0), (1, 0))) == 0.0
    assert discounted_cost(chain, STAY_STAY) == 2.0
    halved = FiniteMdp(chain.transition, chain.cost, chain.initial_dist, 2, discount=0.5)
    assert discounted_cost(halved, STAY_STAY) == 1.5


def test_psi_examples(chain, zero):
    assert psi(chain, STAY_STAY, 0) == discounted_cost(chain, STAY_STAY)
    assert psi(chain, STAY_STAY, 1) == 1.0
    assert psi(zero, Trajectory((0, 1, 0), (1, 0)), 1) == 0.0
    with pytest.raises(IndexError):
        psi(chain, STAY_STAY, 2)


def test_enumeration_counts(chain):
    assert len(list(enumerate_trajectories(chain))) == 4
    P = np.zeros((2, 3, 2))
    P[:, :, 0] = 1.0
    det = FiniteMdp(P, np.zeros((2, 3)), [1, 0], horizon=4)
    assert len(list(enumerate_trajectories(det))) == 3**4
    big = random_mdp(3, 3, 10, seed=0)
    with pytest.raises(CapExceeded):
        list(enumerate_trajectories(big, cap=10**6))


@given(seed=st.integers(0, 2**32 - 1), S=st.integers(1, 3), A=st.integers(1, 3), H=st.integers(1, 3),
       gamma=st.floats(0.1, 1.0))
def test_probabilities_normalise(seed, S, A, H, gamma):
    mdp = random_mdp(S, A, H, seed=seed, discount=gamma)
    pol = TabularSoftmaxPolicy.for_mdp(mdp)
    theta = np.random.default_rng(seed).normal(scale=2.0, size=pol.dim)
    total = sum(math.exp(trajectory_log_prob(mdp, pol, theta, tau)) for tau, _ in enumerate_trajectories(mdp))
    assert total == pytest.approx(1.0, abs=1e-9)


@given(seed=st.integers(0, 2**32 - 1), gamma=st.floats(0.1, 1.0))
def test_psi_telescopes_and_is_bounded(seed, gamma):
    mdp = random_mdp(3, 2, 4, seed=seed, discount=gamma)
    for tau, _ in list(enumerate_trajectories(mdp))[:20]:
        for i in range(mdp.horizon - 1):
            step = gamma**i * mdp.cost[tau.states[i], tau.actions[i]]
            assert psi(mdp, tau, i) - psi(mdp, tau, i + 1) == pytest.approx(step, abs=1e-12)
        assert abs(discounted_cost(mdp, tau)) <= mdp.cost_bound * mdp.horizon


def test_fixture_round_trip(tmp_path, chain):
    path = tmp_path / "chain2.json"
    save_mdp(chain, path)
    assert load_mdp(path) == chain
    mdp = random_mdp(3, 2, 2, seed=4, discount=0.7)
    save_mdp(mdp, path)
    assert load_mdp(path) == mdp


def test_fixture_errors(tmp_path, chain):
    with pytest.raises(FileNotFoundError, match="nope.json"):
        load_mdp(tmp_path / "nope.json")
    doc = mdp_to_dict(chain)
    doc["extra"] = 1
    with pytest.raises(InvalidInput, match="unknown"):
        mdp_from_dict(doc)
    doc = mdp_to_dict(chain)
    del doc["horizon"]
    with pytest.raises(InvalidInput, match="missing"):
        mdp_from_dict(doc)


def test_zero_cost_fixture_validates():
    assert validate_mdp(zero_cost(3, 2, 2)).passed
    assert validate_mdp(chain2()).passed
