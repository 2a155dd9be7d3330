"""Throughput-maximizing schedules for a UAV store-then-amplify-and-forward
relay: causal time-slot pairing, power allocation and trajectory design via
alternating optimization."""

from .channel import (ChannelGains, RateMatrix, causal_mask, compute_gains,
                      pair_rates, rate_matrix, snr_pair)
from .optimizer import (DelayStats, SolveResult, solve_iaf, solve_saf,
                        solve_saf_delay_constrained, solve_static_af,
                        validate_result)
from .pairing import Pairing, identity_pairing, solve_pairing, validate
from .power import (PowerProfile, ScaCoefficients, closed_form_update,
                    sca_coefficients, solve_power, uniform_powers)
from .scenario import (FixedEndpoints, ScenarioConfig, SolverParams,
                       Trajectory, straight_line_trajectory)
from .trajectory import (QcqpError, TrajectorySubproblem, barrier_solve,
                         build_subproblem, solve_qcqp, solve_trajectory,
                         tangent_bound_coefficients)

__version__ = "0.1.0"
