"""Commutative operator vessels, compatibility systems and unitary dilations."""

__version__ = "0.1.0"

from .exceptions import *  # noqa: E402,F401,F403
from .vessel import (CommutingTuple, ConditionReport, ConditionResidual,  # noqa: E402
                     NormalizedPencil, Vessel, adjoint_vessel, cayley_cogenerator,
                     check_vessel, check_vr, check_vr_star, cogenerator_limit,
                     complete_partial_vessel, coordinate_change,
                     dissipative_embedding_report, input_pencil, make_strict_vessel,
                     normalize, output_pencil, pos_cone_margin, weakly_strict_report)
from .series import (AnalyticInitialData, PowerSeriesSolution,  # noqa: E402
                     analytic_polyradius, check_discrete_compat, evaluate_series,
                     growth_bound, solve_discrete)
from .transport import (GridSpec, SampledSignal, apply_pi,  # noqa: E402
                        causal_isometry_check, evaluate_field, forward_fft, inverse,
                        lambda_op, weighted_norms)
from .system import (BoundaryTriple, LineTrajectory,  # noqa: E402
                     energy_balance_residual, extend_trajectory, k0_matching_residual,
                     propagate_state)
from .dilation import (DilationOperatorConfig, DilationVector, dilation_check,  # noqa: E402
                       embed, minimality_diagnostics, project, rho, rho_one_dim)
