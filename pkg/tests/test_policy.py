import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from policy_newton.exceptions import InvalidProbeCount
from policy_newton.policy import TabularSoftmaxPolicy, certify_bounds

POL = TabularSoftmaxPolicy(3, 3)
thetas = arrays(np.float64, POL.dim, elements=st.floats(-6, 6))


def test_log_prob_examples():
    pol = TabularSoftmaxPolicy(2, 2)
    assert pol.log_prob(np.zeros(4), 0, 0) == pytest.approx(math.log(0.5))
    assert pol.log_prob(np.zeros(4), 1, 1) == pytest.approx(math.log(0.5))
    theta = np.array([1.0, 0.0, 0.0, 0.0])
    assert pol.log_prob(theta, 0, 0) == pytest.approx(math.log(math.e / (math.e + 1)))
    assert pol.log_prob(theta + 7.0, 0, 0) == pytest.approx(pol.log_prob(theta, 0, 0))


def test_grad_log_prob_examples():
    pol = TabularSoftmaxPolicy(2, 2)
    assert np.allclose(pol.grad_log_prob(np.zeros(4), 0, 0), [0.5, -0.5, 0, 0])
    sharp = np.array([40.0, 0.0, 0.0, 0.0])
    assert np.allclose(pol.grad_log_prob(sharp, 0, 0), 0.0, atol=1e-12)


def test_hess_log_prob_example():
    pol = TabularSoftmaxPolicy(2, 2)
    H = pol.hess_log_prob(np.zeros(4), 1, 0)
    assert np.allclose(H[2:, 2:], [[-0.25, 0.25], [0.25, -0.25]])
    assert np.all(H[:2, :] == 0) and np.all(H[:, :2] == 0)


def test_certify_bounds_examples():
    assert certify_bounds(TabularSoftmaxPolicy(2, 2), 500, 0).passed
    rep = certify_bounds(TabularSoftmaxPolicy(2, 2, grad_bound=0.1), 10, 0)
    assert not rep.passed and rep.violations[0].startswith("G:")
    with pytest.raises(InvalidProbeCount):
        certify_bounds(TabularSoftmaxPolicy(2, 2), 0)


def test_score_norm_bound_matches_grid_oracle():
    # sup over the simplex of ||onehot(a) - p|| is approached at p -> onehot(b), b != a: sqrt(2)
    best = 0.0
    for p0 in np.linspace(0, 1, 2001):
        p = np.array([p0, 1 - p0])
        best = max(best, np.linalg.norm(np.array([1, 0]) - p))
    assert best == pytest.approx(math.sqrt(2), abs=1e-9)
    assert best <= TabularSoftmaxPolicy(1, 2).grad_bound + 1e-12


@given(theta=thetas, s=st.integers(0, 2))
def test_score_mean_zero_and_fisher_identity(theta, s):
    pi = POL.probs(theta)[s]
    scores = np.array([POL.grad_log_prob(theta, s, a) for a in range(3)])
    assert np.abs(pi @ scores).max() <= 1e-10
    fisher = sum(pi[a] * (POL.hess_log_prob(theta, s, a) + np.outer(scores[a], scores[a])) for a in range(3))
    assert np.abs(fisher).max() <= 1e-10


@given(theta=thetas)
def test_probabilities_normalised_and_curvature_nsd(theta):
    assert np.allclose(POL.probs(theta).sum(axis=1), 1.0, atol=1e-12)
    for blk in POL.curvature_blocks(theta):
        assert np.linalg.eigvalsh(blk).max() <= 1e-12


@given(theta=arrays(np.float64, POL.dim, elements=st.floats(-3, 3)), s=st.integers(0, 2), a=st.integers(0, 2))
def test_derivatives_match_finite_differences(theta, s, a):
    h = 1e-5
    eye = np.eye(POL.dim) * h
    fd_grad = np.array([(POL.log_prob(theta + e, s, a) - POL.log_prob(theta - e, s, a)) / (2 * h) for e in eye])
    assert np.abs(fd_grad - POL.grad_log_prob(theta, s, a)).max() <= 1e-6
    fd_hess = np.array([(POL.grad_log_prob(theta + e, s, a) - POL.grad_log_prob(theta - e, s, a)) / (2 * h)
                        for e in eye])
    assert np.abs(fd_hess - POL.hess_log_prob(theta, s, a)).max() <= 1e-5
