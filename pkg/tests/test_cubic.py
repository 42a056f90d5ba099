import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from policy_newton.cubic import (CubicModel, cubic_finalsolver, cubic_subsolver, model_value, solve_exact,
                                 subsolver_branch, verify_step)
from policy_newton.exceptions import InvalidInput, MaxIterExceeded

from _oracles import cubic_value, grid_minimum_2d

ROOT = (math.sqrt(13) - 1) / 6


def test_model_value_examples():
    m = CubicModel([1.0, 0.0], np.diag([1.0, 2.0]), 6.0)
    assert model_value(m, [0.0, 0.0]) == 0.0
    # 1-D polynomial t + t^2/2 + |t|^3 at t = -0.4343, cross-checked on a fine 1-D grid
    t = np.linspace(-1, 1, 2_000_001)
    poly = t + 0.5 * t**2 + np.abs(t) ** 3
    assert model_value(m, [-0.4343, 0.0]) == pytest.approx(-0.4343 + 0.5 * 0.4343**2 + 0.4343**3, abs=1e-12)
    assert model_value(m, [-0.4343, 0.0]) == pytest.approx(poly.min(), abs=1e-6)
    m2 = CubicModel([0.0, 0.0], np.diag([-1.0, 2.0]), 1.0)
    assert model_value(m2, [2.0, 0.0]) == pytest.approx(-2 + 8 / 6)
    functional = CubicModel([1.0, 0.0], lambda v: np.array([v[0], 2 * v[1]]), 6.0)
    assert model_value(functional, [0.3, -0.2]) == pytest.approx(model_value(m, [0.3, -0.2]))


def test_model_value_dimension_mismatch():
    with pytest.raises(InvalidInput):
        model_value(CubicModel([1.0, 0.0], np.eye(2), 1.0), [1.0])


def test_model_validation():
    with pytest.raises(InvalidInput):
        CubicModel([1.0, np.nan], np.eye(2), 1.0)
    with pytest.raises(InvalidInput):
        CubicModel([1.0, 0.0], np.eye(2), 0.0)
    with pytest.raises(InvalidInput):
        CubicModel([1.0, 0.0], np.eye(3), 1.0)


def test_exact_psd_stationary():
    sol = solve_exact(CubicModel([0.0, 0.0], np.diag([1.0, 2.0]), 1.0))
    assert np.all(sol.delta == 0) and sol.model_value == 0


def test_exact_hard_case_tie_break():
    sol = solve_exact(CubicModel([0.0, 0.0], np.diag([-1.0, 2.0]), 1.0))
    assert np.allclose(sol.delta, [2.0, 0.0], atol=1e-12)
    assert sol.model_value == pytest.approx(-2 / 3, abs=1e-12)
    flipped = solve_exact(CubicModel([0.0, 0.0], np.diag([2.0, -1.0]), 1.0))
    assert np.allclose(flipped.delta, [0.0, 2.0], atol=1e-12)


def test_exact_interior_root_matches_closed_form_and_grid():
    m = CubicModel([1.0, 0.0], np.diag([1.0, 2.0]), 6.0)
    sol = solve_exact(m)
    assert np.allclose(sol.delta, [-ROOT, 0.0], atol=1e-12)
    best, arg = grid_minimum_2d(m.g, m.hess, 6.0, half_width=1.0, step=1e-4)
    assert np.abs(arg - sol.delta).max() <= 1e-4
    assert sol.model_value <= best + 1e-12


def test_exact_hard_case_with_gradient():
    # g has no bottom-eigenvector component and the interior root is absent
    H = np.diag([-2.0, 1.0, 3.0])
    g = np.array([0.0, 0.5, 0.0])
    sol = solve_exact(CubicModel(g, H, 1.0))
    assert sol.stationarity_residual <= 1e-8 and sol.curvature_margin >= -1e-8
    assert np.linalg.norm(sol.delta) == pytest.approx(4.0)
    assert sol.delta[0] > 0


def test_exact_dimension_cap():
    with pytest.raises(InvalidInput):
        solve_exact(CubicModel(np.ones(5), np.eye(5), 1.0), dim_cap=4)


def test_verify_step_examples():
    m = CubicModel([1.0, 0.0], np.diag([1.0, 2.0]), 6.0)
    assert verify_step(m, solve_exact(m).delta).stationarity_residual <= 1e-8
    assert verify_step(m, [0.0, 0.0]).stationarity_residual == pytest.approx(1.0)
    rep = verify_step(CubicModel([0.0, 0.0], np.diag([1.0, 2.0]), 1.0), [0.0, 0.0])
    assert rep.stationarity_residual == 0 and rep.curvature_margin >= 0


def test_verify_step_functional_path():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(30, 30))
    H = (A + A.T) / 2
    g = rng.normal(size=30)
    dense = CubicModel(g, H, 2.0)
    sol = solve_exact(dense)
    rep = verify_step(CubicModel(g, lambda v: H @ v, 2.0), sol.delta)
    assert rep.stationarity_residual <= 1e-8
    assert rep.curvature_margin == pytest.approx(sol.curvature_margin, abs=1e-6)


def test_subsolver_cauchy_example():
    m = CubicModel([1.0, 0.0], np.eye(2), 1.0, lipschitz_l=1.0)
    assert subsolver_branch(m) == "subsolver-cauchy"
    delta, dJ = cubic_subsolver(m, 0.1, 5, rng=0)
    assert np.allclose(delta, [-(math.sqrt(3) - 1), 0.0], atol=1e-12)
    assert dJ == pytest.approx(model_value(m, delta))


@pytest.mark.parametrize("seed", range(5))
def test_subsolver_perturbation_only_dynamics(seed):
    H = np.diag([0.5, 1.0, 2.0])
    m = CubicModel(np.zeros(3), H, 1.0, lipschitz_l=2.0)
    eps = 0.01
    sigma = 0.1 * math.sqrt(eps * 1.0) / 2.0
    delta, _ = cubic_subsolver(m, eps, 500, rng=seed)
    assert subsolver_branch(m) == "subsolver-gd"
    assert np.linalg.norm(delta) <= sigma / 0.5 + 1e-12


def test_subsolver_zero_inner_iterations():
    m = CubicModel([0.01, 0.0], np.eye(2), 1.0, lipschitz_l=1.0)
    delta, dJ = cubic_subsolver(m, 0.1, 0, rng=1)
    assert np.all(delta == 0) and dJ == 0


def test_finalsolver_examples():
    psd = CubicModel([0.0, 0.0], np.diag([1.0, 2.0]), 1.0, lipschitz_l=2.0)
    assert np.all(cubic_finalsolver(psd, 1e-3) == 0)
    m = CubicModel([1.0, 0.0], np.diag([1.0, 2.0]), 6.0, lipschitz_l=2.0)
    assert np.abs(cubic_finalsolver(m, 1e-6) - np.array([-ROOT, 0.0])).max() <= 1e-5
    assert np.all(cubic_finalsolver(m, 2.5) == 0)


def test_finalsolver_iteration_cap():
    m = CubicModel([1.0, 0.0], np.diag([1.0, 2.0]), 6.0, lipschitz_l=2.0)
    with pytest.raises(MaxIterExceeded):
        cubic_finalsolver(m, 1e-12, max_iter=5)


def test_approximate_solvers_need_l():
    with pytest.raises(InvalidInput):
        cubic_finalsolver(CubicModel([1.0], np.eye(1), 1.0), 0.1)


sym = arrays(np.float64, (4, 4), elements=st.floats(-3, 3)).map(lambda A: (A + A.T) / 2)
vec = arrays(np.float64, 4, elements=st.floats(-3, 3))
alphas = st.sampled_from([0.5, 1.0, 3.0, 10.0])


@given(H=sym, g=vec, alpha=alphas)
def test_exact_certificate_and_model_decrease(H, g, alpha):
    m = CubicModel(g, H, alpha)
    sol = solve_exact(m)
    rep = verify_step(m, sol.delta)
    assert rep.ok(1e-8 * max(1.0, np.linalg.norm(g)), -1e-8)
    assert sol.model_value <= 0.0
    assert sol.model_value <= -(alpha / 12) * np.linalg.norm(sol.delta) ** 3 + 1e-10
    assert sol.model_value == pytest.approx(cubic_value(g, H, alpha, sol.delta), abs=1e-12)


@given(H=sym, alpha=alphas)
def test_negative_curvature_escape(H, alpha):
    lam = np.linalg.eigvalsh(H)[0]
    sol = solve_exact(CubicModel(np.zeros(4), H, alpha))
    if lam < 0:
        assert np.linalg.norm(sol.delta) >= 2 * abs(lam) / alpha - 1e-9


@given(H=sym, g=vec, alpha=alphas)
def test_exact_beats_random_candidates(H, g, alpha):
    m = CubicModel(g, H, alpha)
    sol = solve_exact(m)
    cands = np.random.default_rng(0).normal(size=(200, 4)) * 3
    assert all(sol.model_value <= cubic_value(g, H, alpha, c) + 1e-10 for c in cands)


@given(A=arrays(np.float64, (3, 3), elements=st.floats(-1, 1)), g=arrays(np.float64, 3, elements=st.floats(-2, 2)),
       alpha=alphas)
def test_finalsolver_agrees_with_exact_on_regular_models(A, g, alpha):
    H = A @ A.T + 0.5 * np.eye(3)
    eps = 1e-3
    m = CubicModel(g, H, alpha, lipschitz_l=float(np.linalg.norm(H, 2)) + alpha * 3)
    assert np.linalg.norm(cubic_finalsolver(m, eps) - solve_exact(m).delta) <= 10 * eps


@pytest.mark.parametrize("g_scale", [0.0, 1e-92, 1e-9])
def test_singular_hessian_with_tiny_gradient(g_scale):
    # rank-deficient H: one negative eigenvalue, a double zero and a positive one
    H = np.ones((4, 4))
    H[0, 0] = 0.0
    g = np.full(4, g_scale)
    for hess in (H, np.ones((4, 4))):
        m = CubicModel(g, hess, 0.5)
        sol = solve_exact(m)
        assert verify_step(m, sol.delta).ok(1e-8, -1e-8)
        assert sol.model_value <= 0.0
