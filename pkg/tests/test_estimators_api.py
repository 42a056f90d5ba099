import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from policy_newton.estimators import ApproxCubicPolicyNewton, CubicPolicyNewton, ReinforcePolicyGradient
from policy_newton.exceptions import InvalidInput
from policy_newton.oracle import exact_value
from policy_newton.policy import TabularSoftmaxPolicy


def test_params_round_trip():
    est = CubicPolicyNewton(epsilon=0.3, m=100, seed=4)
    assert est.get_params()["m"] == 100
    est.set_params(b=50)
    assert clone(est).get_params()["b"] == 50


@pytest.mark.parametrize("est", [
    CubicPolicyNewton(epsilon=0.3, m=500, b=500, n_iter=10, seed=11),
    ApproxCubicPolicyNewton(epsilon=0.3, m=200, b=200, n_iter=10, seed=11),
    ReinforcePolicyGradient(step_size=0.5, n_iter=10, batch_size=200, seed=11),
])
def test_fit_predict_score(est, chain):
    est.fit("chain2")
    assert est.theta_.shape == (4,) and est.n_iter_ == len(est.report_.records)
    proba = est.predict_proba([0, 1])
    assert proba.shape == (2, 2) and np.allclose(proba.sum(axis=1), 1.0)
    assert np.array_equal(est.predict([0, 1]), proba.argmax(axis=1))
    pol = TabularSoftmaxPolicy.for_mdp(chain)
    assert est.score() == pytest.approx(-exact_value(chain, pol, est.theta_))
    assert est.score(chain) == est.score()


def test_unfitted_and_bad_input(chain):
    with pytest.raises(NotFittedError):
        CubicPolicyNewton().predict([0])
    est = CubicPolicyNewton(epsilon=0.3, m=20, b=20, n_iter=2).fit(chain)
    with pytest.raises(InvalidInput):
        est.predict([2])
    with pytest.raises(InvalidInput):
        CubicPolicyNewton().fit(chain, theta0=np.zeros(3))
    with pytest.raises(InvalidInput):
        CubicPolicyNewton().fit(42)
