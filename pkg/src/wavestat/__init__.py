"""Spectral fundamental solutions for stationary-action wave problems.

The one-dimensional wave equation on ``[0, L]`` with Dirichlet ends is
treated in the sine eigenbasis.  Boundary value problems (initial and
terminal data) are solved through the closed-form value function of an
equivalent optimal control problem.
"""

from .errors import (BasisMismatchError, CFLError, ConfigError, ConjugatePointError, HorizonError,
                     PenaltyTooSmallError, ProfileError, SingularOperatorError, WaveStatError)
from .long_horizon import (ConcatenationPlan, plan_concatenation, solve_intermediate_states, stat_value,
                           stationarity_residual)
from .payoff import (PayoffSpec, PiecewiseConstantInput, QuadraticPayoff, ZeroPayoff, LinearVelocityPayoff,
                     concave_horizon, energy_split, evaluate_payoff, second_difference)
from .propagator import WaveState, fd_oracle, propagate_profile, semigroup_step, trotter_kato_gap
from .riccati import (FundamentalSolution, ModeParams, cbar, concavity_horizon, eig_pqr_finite, eig_pqr_infty,
                      eval_W, fundamental_solution, riccati_residual, verification_hamiltonian)
from .spectral import (BasisConfig, DiagonalOperator, SpectralVector, basis_fn_value, lambda_n, make_operator,
                       op_apply, op_compose, op_invert, project_analytic, project_profile, reconstruct)
from .tpbvp import (Displacement, TpbvpProblem, TpbvpSolution, Velocity, optimal_feedback, solve,
                    solve_displacement, solve_velocity, velocity_one_shot)

__all__ = [name for name in dir() if not name.startswith("_")]
