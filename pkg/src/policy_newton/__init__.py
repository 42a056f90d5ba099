"""Cubic-regularised policy Newton methods for finite-horizon tabular MDPs."""

from ._dense import forbid_dense_hessian
from .cubic import (CubicModel, CubicSolution, cubic_finalsolver, cubic_subsolver, model_value,
                    solve_exact, verify_step)
from .driver import IterationRecord, RunReport, run_acrpn, run_crpn, run_reinforce
from .estimator import (GradEstimate, HessEstimate, HvpHandle, batch_gradient, batch_hessian, batch_hvp,
                        phi_grad, single_traj_hessian)
from .estimators import ApproxCubicPolicyNewton, CubicPolicyNewton, ReinforcePolicyGradient
from .exceptions import (CapExceeded, DenseHessianForbidden, InvalidCount, InvalidInput, InvalidProbeCount,
                         MaxIterExceeded, NotSymmetric, NumericalFailure, PolicyNewtonError)
from .fixtures import chain2, random_mdp, saddle3, zero_cost
from .mdp import (FiniteMdp, Trajectory, enumerate_trajectories, load_mdp, save_mdp, trajectory_log_prob,
                  validate_mdp)
from .oracle import (ExactDerivatives, exact_derivatives, exact_value, finite_diff_grad, finite_diff_hess,
                     is_eps_sosp, min_eigenvalue)
from .policy import TabularSoftmaxPolicy, certify_bounds
from .sampler import SampleBatch, Substream, derive_seed, sample_batch, sample_trajectory
from .schedule import (Schedule, SmoothnessConstants, compute_constants, schedule_approx,
                       schedule_expectation, schedule_highprob)

__version__ = "0.1.0"
