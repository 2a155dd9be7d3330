"""Trajectory subproblem: SCA with a concave quadratic surrogate, each inner
problem solved by a log-barrier Newton method with banded linear algebra.

The inner problem maximizes a per-slot separable concave quadratic subject to
the chain of displacement balls (consecutive waypoints, plus optional fixed
launch/landing balls).  Only consecutive slots are coupled, so the barrier
Hessian is banded with half-bandwidth 3 and every Newton step costs O(N).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dpbsv

from .channel import ChannelGains, compute_gains
from .pairing import Pairing
from .power import PowerProfile, pair_objective
from .scenario import ScenarioConfig, SolverParams, Trajectory

LN2 = np.log(2.0)


# ---------------------------------------------------------------------------
# Surrogate construction
# ---------------------------------------------------------------------------

def trajectory_objective(pairing: Pairing, powers: PowerProfile,
                         traj: Trajectory, config: ScenarioConfig) -> float:
    """True objective: summed rate over matched pairs at the given waypoints."""
    gains = compute_gains(config, traj)
    return pair_objective(pairing, gains, powers)


def tangent_bound_coefficients(pairing: Pairing, powers: PowerProfile,
                               local: Trajectory, config: ScenarioConfig):
    """Per-pair surrogate coefficients (B_s, B_u) at the expansion trajectory.

    B_s[k] (B_u[k]) is minus the partial derivative of pair k's rate with
    respect to the squared S-UAV (UAV-D) distance.  Pairs with zero power on
    either side carry zero rate and get zero coefficients; callers drop them.
    """
    ri = pairing.receive_slots() - 1
    tj = pairing.transmit_slots() - 1
    beta_s = powers.P_s[ri] * config.gamma0
    beta_u = powers.P_u[tj] * config.gamma0
    h2 = config.H ** 2
    theta_s = local.x[ri] ** 2 + local.y[ri] ** 2 + h2
    theta_u = (local.x[tj] - config.L) ** 2 + local.y[tj] ** 2 + h2
    F = beta_u * theta_s + beta_s * theta_u + theta_s * theta_u
    with np.errstate(divide="ignore", invalid="ignore"):
        B_s = beta_s * beta_u / (F * (beta_s + theta_s) * LN2)
        B_u = beta_s * beta_u / (F * (beta_u + theta_u) * LN2)
    dead = (beta_s <= 0) | (beta_u <= 0)
    B_s[dead] = 0.0
    B_u[dead] = 0.0
    return B_s, B_u


@dataclass
class TrajectorySubproblem:
    """Concave quadratic surrogate plus the displacement-ball constraints.

    Objective: sum_k [-q[k]*(x_k^2 + y_k^2) + lin_x[k]*x_k] + const, with
    q >= 0.  `expansion` is the (strictly feasible) SCA expansion point.
    """

    q: np.ndarray
    lin_x: np.ndarray
    const: float
    D_u2: float
    expansion: np.ndarray                  # (N, 2)
    start: np.ndarray | None = None        # fixed launch point or None
    end: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.q.shape[0]

    def objective(self, xy: np.ndarray) -> float:
        x, y = xy[:, 0], xy[:, 1]
        return float(np.sum(-self.q * (x * x + y * y) + self.lin_x * x) + self.const)

    def objective_grad(self, xy: np.ndarray) -> np.ndarray:
        g = np.empty_like(xy)
        g[:, 0] = -2.0 * self.q * xy[:, 0] + self.lin_x
        g[:, 1] = -2.0 * self.q * xy[:, 1]
        return g

    def constraint_values(self, xy: np.ndarray) -> np.ndarray:
        """Squared displacements g_m(z); feasible iff g_m <= D_u2."""
        vals = []
        if self.N > 1:
            d = np.diff(xy, axis=0)
            vals.append(np.sum(d * d, axis=1))
        if self.start is not None:
            d0 = xy[0] - self.start
            vals.append([d0 @ d0])
        if self.end is not None:
            dF = self.end - xy[-1]
            vals.append([dF @ dF])
        if not vals:
            return np.empty(0)
        return np.concatenate([np.atleast_1d(v) for v in vals])


def build_subproblem(pairing: Pairing, powers: PowerProfile, local: Trajectory,
                     config: ScenarioConfig) -> TrajectorySubproblem:
    """Assemble the SCA surrogate at `local`, dropping zero-rate pairs."""
    B_s, B_u = tangent_bound_coefficients(pairing, powers, local, config)
    ri = pairing.receive_slots() - 1
    tj = pairing.transmit_slots() - 1
    live = (B_s > 0) & (B_u > 0)
    N = config.N
    q = np.zeros(N)
    lin_x = np.zeros(N)
    np.add.at(q, ri[live], B_s[live])
    np.add.at(q, tj[live], B_u[live])
    np.add.at(lin_x, tj[live], 2.0 * config.L * B_u[live])
    # Constant chosen so the surrogate value equals the true objective at the
    # expansion point (tangency).
    f_local = trajectory_objective(pairing, powers, local, config)
    base = TrajectorySubproblem(
        q=q, lin_x=lin_x, const=0.0, D_u2=config.D_u ** 2,
        expansion=local.xy.copy(),
        start=None if config.endpoints is None else config.endpoints.start,
        end=None if config.endpoints is None else config.endpoints.end,
    )
    base.const = f_local - base.objective(local.xy)
    return base


# ---------------------------------------------------------------------------
# Log-barrier Newton solver
# ---------------------------------------------------------------------------

@dataclass
class BarrierResult:
    trajectory: Trajectory
    lambdas: np.ndarray          # KKT multipliers from the final barrier stage
    objective: float
    kkt_residual: float
    newton_iters: int
    stages: int
    converged: bool
    message: str = ""


class QcqpError(RuntimeError):
    """Inner solver failed to reach tolerance; carries the best iterate."""

    def __init__(self, message: str, best: BarrierResult):
        super().__init__(message)
        self.best = best


def _barrier_grad_hess(sub: TrajectorySubproblem, xy: np.ndarray, t: float):
    """Gradient of t*(-obj) - sum log(s) and its Hessian in banded lower form.

    Band rows are diagonals 0..3 of the (2N x 2N) Hessian with interleaved
    (x, y) ordering; only consecutive slots couple, so bandwidth 3 suffices.
    """
    N = sub.N
    n = 2 * N
    grad = (-t) * sub.objective_grad(xy).reshape(-1)
    ab = np.zeros((4, n))
    ab[0, 0::2] += 2.0 * t * sub.q
    ab[0, 1::2] += 2.0 * t * sub.q

    if N > 1:
        d = np.diff(xy, axis=0)                      # (N-1, 2)
        s = sub.D_u2 - np.sum(d * d, axis=1)
        inv_s = 1.0 / s
        # gradient: (1/s) * grad g, with grad g = [-2d at slot k, +2d at k+1]
        gslot = (2.0 * inv_s)[:, None] * d
        gfull = np.zeros_like(xy)
        gfull[:-1] -= gslot
        gfull[1:] += gslot
        grad += gfull.reshape(-1)
        # Hessian: (2/s)*[[I,-I],[-I,I]] + (4/s^2) * (grad g)(grad g)^T
        A1 = 2.0 * inv_s
        A2 = 4.0 * inv_s * inv_s
        dx, dy = d[:, 0], d[:, 1]
        dxx = A1 + A2 * dx * dx
        dyy = A1 + A2 * dy * dy
        dxy = A2 * dx * dy
        # Chain k occupies columns 2k..2k+3; strided slices keep the
        # assembly free of index-array allocations.
        w = 2 * (N - 1)
        ab[0, 0:w:2] += dxx
        ab[0, 1:w + 1:2] += dyy
        ab[0, 2:w + 2:2] += dxx
        ab[0, 3:w + 3:2] += dyy
        ab[1, 0:w:2] += dxy      # (y_k, x_k)
        ab[1, 1:w + 1:2] -= dxy  # (x_{k+1}, y_k)
        ab[1, 2:w + 2:2] += dxy  # (y_{k+1}, x_{k+1})
        ab[2, 0:w:2] -= dxx      # (x_{k+1}, x_k)
        ab[2, 1:w + 1:2] -= dyy  # (y_{k+1}, y_k)
        ab[3, 0:w:2] -= dxy      # (y_{k+1}, x_k)

    for point, idx in ((sub.start, 0), (sub.end, N - 1)):
        if point is None:
            continue
        d0 = xy[idx] - point
        s0 = sub.D_u2 - d0 @ d0
        inv0 = 1.0 / s0
        grad[2 * idx:2 * idx + 2] += 2.0 * inv0 * d0
        A2 = 4.0 * inv0 * inv0
        ab[0, 2 * idx] += 2.0 * inv0 + A2 * d0[0] * d0[0]
        ab[0, 2 * idx + 1] += 2.0 * inv0 + A2 * d0[1] * d0[1]
        ab[1, 2 * idx] += A2 * d0[0] * d0[1]

    return grad, ab


def _solve_band(ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the banded SPD Newton system; tiny ridge guards rank deficiency.

    Calls the LAPACK banded Cholesky solver directly (the thin wrapper keeps
    the per-step cost O(N) without per-call validation overhead).
    """
    reg = ab.copy()
    reg[0] += 1e-12 * (np.max(ab[0]) + 1.0)
    _, x, info = dpbsv(reg, rhs, lower=1, overwrite_ab=1, overwrite_b=0)
    if info != 0:
        raise np.linalg.LinAlgError(f"banded Cholesky failed (info={info})")
    return x


def _strictly_feasible(sub: TrajectorySubproblem, xy: np.ndarray,
                       margin: float) -> bool:
    g = sub.constraint_values(xy)
    return g.size == 0 or np.max(g) < sub.D_u2 * (1.0 - margin)


def _shrink_to_interior(sub: TrajectorySubproblem, xy: np.ndarray) -> np.ndarray:
    """Pull waypoints toward the centroid until strictly inside every ball."""
    out = xy.copy()
    if _strictly_feasible(sub, out, 1e-12):
        return out
    centroid = out.mean(axis=0)
    for _ in range(64):
        out = centroid + (out - centroid) * (1.0 - 1e-6)
        if _strictly_feasible(sub, out, 1e-12):
            return out
    raise ValueError("could not recover a strictly feasible barrier start")


def barrier_solve(sub: TrajectorySubproblem,
                  params: SolverParams | None = None) -> BarrierResult:
    """Log-barrier Newton method for the surrogate QCQP.

    Stages multiply the barrier parameter by `barrier_mu` until the duality
    gap m/t and the normalized stationarity residual are both below target.
    """
    params = params or SolverParams()
    N = sub.N
    xy = _shrink_to_interior(sub, sub.expansion)
    m = sub.constraint_values(xy).size
    grad_scale = 1.0 + float(np.max(np.abs(sub.objective_grad(xy))))
    newton_budget = params.newton_max_iter
    total_newton = 0
    stages = 0

    if m == 0:
        # Unconstrained concave quadratic: exact Newton step where curvature
        # exists; slots without objective stay at the expansion point.
        pos = sub.q > 0
        xy = xy.copy()
        xy[pos, 0] = sub.lin_x[pos] / (2.0 * sub.q[pos])
        xy[pos, 1] = 0.0
        traj = Trajectory(xy)
        grad = sub.objective_grad(xy)
        res = float(np.max(np.abs(grad[pos]))) / grad_scale if pos.any() else 0.0
        return BarrierResult(traj, np.empty(0), sub.objective(xy), res,
                             1, 1, True)

    obj0 = abs(sub.objective(xy))
    t = max(m / (0.1 * max(obj0, 1.0)), 1.0)
    lambdas = np.zeros(m)
    while True:
        stages += 1
        scale = 1.0 + float(np.max(np.abs(sub.objective_grad(xy))))
        # Newton loop at fixed t: stop once the implied stationarity residual
        # ||grad phi|| / t is well below the KKT tolerance.
        stat_target = 0.1 * params.kkt_tol * t * scale
        for _ in range(params.newton_max_iter):
            grad, ab = _barrier_grad_hess(sub, xy, t)
            if float(np.max(np.abs(grad))) <= stat_target:
                break
            step = _solve_band(ab, -grad)
            if float(-grad @ step) <= 0.0:
                break
            new_xy = _line_search(sub, xy, step.reshape(-1, 2), grad, t)
            total_newton += 1
            if new_xy is xy:
                break
            xy = new_xy
        s = sub.D_u2 - sub.constraint_values(xy)
        lambdas = 1.0 / (t * s)
        # Duality gap target m/t, relative to the current objective scale;
        # 1e-9 keeps the SCA trace monotone at working precision without
        # driving t (and hence the slacks) below float resolution.
        if m / t <= max(1e-12, 1e-9 * max(1.0, abs(sub.objective(xy)))):
            break
        if stages > 60 or total_newton > 64 * newton_budget:
            traj = Trajectory(xy)
            best = BarrierResult(traj, lambdas, sub.objective(xy),
                                 kkt_residual(sub, xy, lambdas),
                                 total_newton, stages, False,
                                 "barrier iteration cap reached")
            raise QcqpError("barrier iteration cap reached", best)
        t *= params.barrier_mu

    traj = Trajectory(xy)
    res = kkt_residual(sub, xy, lambdas)
    converged = res < params.kkt_tol
    result = BarrierResult(traj, lambdas, sub.objective(xy), res,
                           total_newton, stages, converged)
    if not converged:
        raise QcqpError(f"KKT residual {res:.2e} above tolerance", result)
    return result


def _line_search(sub: TrajectorySubproblem, xy: np.ndarray, step: np.ndarray,
                 grad: np.ndarray, t: float) -> np.ndarray:
    """Backtracking line search on the barrier function, feasibility first."""
    def phi(z):
        s = sub.D_u2 - sub.constraint_values(z)
        if np.any(s <= 0):
            return np.inf
        return -t * sub.objective(z) - float(np.sum(np.log(s)))

    f0 = phi(xy)
    slope = float(grad @ step.reshape(-1))
    alpha = 1.0
    for _ in range(60):
        cand = xy + alpha * step
        if phi(cand) <= f0 + 0.25 * alpha * slope:
            return cand
        alpha *= 0.5
    return xy


def kkt_residual(sub: TrajectorySubproblem, xy: np.ndarray,
                 lambdas: np.ndarray) -> float:
    """Normalized stationarity residual ||grad f - sum lam * grad g||."""
    r = sub.objective_grad(xy).copy()
    idx = 0
    N = sub.N
    if N > 1:
        d = np.diff(xy, axis=0)
        lam = lambdas[idx:idx + N - 1]
        idx += N - 1
        contrib = (2.0 * lam)[:, None] * d
        r[:-1] += contrib
        r[1:] -= contrib
    if sub.start is not None:
        lam = lambdas[idx]
        idx += 1
        r[0] -= 2.0 * lam * (xy[0] - sub.start)
    if sub.end is not None:
        lam = lambdas[idx]
        r[-1] += 2.0 * lam * (sub.end - xy[-1])
    scale = 1.0 + float(np.max(np.abs(sub.objective_grad(xy))))
    return float(np.max(np.abs(r))) / scale


def solve_qcqp(sub: TrajectorySubproblem,
               params: SolverParams | None = None) -> Trajectory:
    """Solve the surrogate QCQP; raises QcqpError (with best iterate) on
    failure to reach the KKT tolerance."""
    return barrier_solve(sub, params).trajectory


# ---------------------------------------------------------------------------
# SCA outer loop
# ---------------------------------------------------------------------------

def solve_trajectory(pairing: Pairing, powers: PowerProfile, init: Trajectory,
                     config: ScenarioConfig,
                     params: SolverParams | None = None):
    """SCA over trajectory surrogates; returns (Trajectory, objective trace).

    The trace holds the true summed rate per iteration and is monotone
    non-decreasing: an inner solution that fails to improve the true
    objective (possible only through the barrier gap) is discarded.
    """
    params = params or config.solver
    if not init.is_feasible(config):
        raise ValueError("initial trajectory violates the speed constraints")
    current = init.copy()
    f_cur = trajectory_objective(pairing, powers, current, config)
    trace = [f_cur]
    for _ in range(params.traj_sca_max_iter):
        sub = build_subproblem(pairing, powers, current, config)
        if not np.any(sub.q > 0):
            break     # no live pairs: nothing to optimize
        try:
            candidate = solve_qcqp(sub, params)
        except QcqpError as err:
            candidate = err.best.trajectory
        f_new = trajectory_objective(pairing, powers, candidate, config)
        if f_new > f_cur:
            current = candidate
        else:
            f_new = f_cur
        trace.append(f_new)
        if abs(f_new - f_cur) <= params.traj_sca_tol * max(1.0, abs(f_cur)):
            f_cur = f_new
            break
        f_cur = f_new
    return current, np.array(trace)
