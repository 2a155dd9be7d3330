"""Alternating optimization over pairing, power and trajectory, plus the
IAF and static-hover comparison baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pairing as pairing_mod
from .channel import compute_gains, rate_matrix, snr_pair
from .pairing import Pairing, identity_pairing, solve_pairing
from .power import PowerProfile, solve_power, uniform_powers
from .scenario import ScenarioConfig, Trajectory, straight_line_trajectory
from .trajectory import solve_trajectory, trajectory_objective

POWER_CLAMP = 1e-12   # fraction of E/N used to keep matched powers positive


@dataclass
class DelayStats:
    """Buffering delay over matched pairs, in seconds."""

    mean_s: float
    max_s: float


@dataclass
class SolveResult:
    pairing: Pairing
    powers: PowerProfile
    trajectory: Trajectory
    objective_trace: np.ndarray    # average spectral efficiency per AO iteration
    delay_stats: DelayStats
    iterations: int
    status: str                    # "converged" | "iteration-capped"

    @property
    def throughput(self) -> float:
        """Final average spectral efficiency, bps/Hz."""
        return float(self.objective_trace[-1])

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _delay_stats(pairing: Pairing, config: ScenarioConfig) -> DelayStats:
    if len(pairing) == 0:
        return DelayStats(0.0, 0.0)
    d = pairing.delays() * config.slot_duration
    return DelayStats(float(d.mean()), float(d.max()))


def _average_rate(pairing: Pairing, powers: PowerProfile, traj: Trajectory,
                  config: ScenarioConfig) -> float:
    return trajectory_objective(pairing, powers, traj, config) / config.N


def _ao_loop(config: ScenarioConfig, fixed_identity: bool) -> SolveResult:
    params = config.solver
    powers = uniform_powers(config.N, config.E_s, config.E_u)
    traj = straight_line_trajectory(config)
    pairing = identity_pairing(config.N)
    trace = []
    prev = _average_rate(pairing, powers, traj, config)
    status = "iteration-capped"
    iterations = 0
    for it in range(params.ao_max_iter):
        iterations = it + 1
        if fixed_identity:
            pairing = identity_pairing(config.N)
        else:
            rates = rate_matrix(config, traj, powers)
            pairing = solve_pairing(rates)
        if len(pairing) == 0:
            pairing = identity_pairing(config.N)

        gains = compute_gains(config, traj)
        clamped = powers.copy()
        floor_s = POWER_CLAMP * config.E_s / config.N
        floor_u = POWER_CLAMP * config.E_u / config.N
        ri = pairing.receive_slots() - 1
        tj = pairing.transmit_slots() - 1
        clamped.P_s[ri] = np.maximum(clamped.P_s[ri], floor_s)
        clamped.P_u[tj] = np.maximum(clamped.P_u[tj], floor_u)
        powers, _ = solve_power(pairing, gains, clamped, config.E_s,
                                config.E_u, tol=params.power_sca_tol,
                                max_iter=params.power_sca_max_iter)

        traj, _ = solve_trajectory(pairing, powers, traj, config, params)

        obj = _average_rate(pairing, powers, traj, config)
        trace.append(obj)
        if abs(obj - prev) < params.ao_tol:
            status = "converged"
            break
        prev = obj

    return SolveResult(
        pairing=pairing,
        powers=powers,
        trajectory=traj,
        objective_trace=np.array(trace),
        delay_stats=_delay_stats(pairing, config),
        iterations=iterations,
        status=status,
    )


def solve_saf(config: ScenarioConfig) -> SolveResult:
    """Full alternating optimization of pairing, powers and trajectory."""
    return _ao_loop(config, fixed_identity=False)


def solve_iaf(config: ScenarioConfig) -> SolveResult:
    """Instant AF baseline: same AO loop with the pairing frozen to identity."""
    return _ao_loop(config, fixed_identity=True)


def solve_saf_delay_constrained(config: ScenarioConfig, D_m: int) -> SolveResult:
    """SAF with the buffering-delay cap j <= i + D_m applied to the pairing."""
    if D_m < 0:
        raise ValueError("D_m must be >= 0")
    return solve_saf(config.with_delay(D_m))


def solve_static_af(config: ScenarioConfig, grid_points: int = 201) -> SolveResult:
    """Best fixed hover location on the S-D axis with uniform powers.

    Evaluates the IAF rate at grid_points hover positions x in [0, L], y = 0,
    and returns the best as a constant trajectory.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    P_s = config.E_s / config.N
    P_u = config.E_u / config.N
    xs = np.linspace(0.0, config.L, grid_points)
    h2 = config.H ** 2
    rho_s = config.gamma0 / (xs ** 2 + h2)
    rho_u = config.gamma0 / ((xs - config.L) ** 2 + h2)
    rates = np.log2(1.0 + snr_pair(P_s, P_u, rho_s, rho_u))
    best = int(np.argmax(rates))
    xy = np.tile([xs[best], 0.0], (config.N, 1))
    traj = Trajectory(xy)
    powers = uniform_powers(config.N, config.E_s, config.E_u)
    pairing = identity_pairing(config.N)
    obj = _average_rate(pairing, powers, traj, config)
    return SolveResult(
        pairing=pairing,
        powers=powers,
        trajectory=traj,
        objective_trace=np.array([obj]),
        delay_stats=DelayStats(0.0, 0.0),
        iterations=1,
        status="converged",
    )


def validate_result(result: SolveResult, config: ScenarioConfig) -> bool:
    """Mutual consistency of the returned schedule components."""
    return (pairing_mod.validate(result.pairing, config)
            and result.powers.is_feasible(config.E_s, config.E_u)
            and result.trajectory.is_feasible(config))
