"""Problem instance description: scenario parameters and UAV trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Relative slack allowed when checking the per-slot displacement balls.
SPEED_FEAS_RTOL = 1e-9


@dataclass(frozen=True)
class SolverParams:
    """Tolerances and iteration caps for the AO loop and its sub-solvers."""

    ao_tol: float = 0.01          # absolute change of the normalized objective
    ao_max_iter: int = 100
    power_sca_tol: float = 1e-6   # relative objective improvement
    power_sca_max_iter: int = 50
    traj_sca_tol: float = 1e-6
    traj_sca_max_iter: int = 30
    barrier_mu: float = 10.0      # barrier parameter growth per stage
    kkt_tol: float = 1e-6         # normalized stationarity residual target
    newton_max_iter: int = 200


@dataclass(frozen=True)
class FixedEndpoints:
    """Pre-determined launch and landing locations (meters)."""

    x0: float
    y0: float
    xF: float
    yF: float

    @property
    def start(self) -> np.ndarray:
        return np.array([self.x0, self.y0], dtype=float)

    @property
    def end(self) -> np.ndarray:
        return np.array([self.xF, self.yF], dtype=float)


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and algorithmic parameters of one problem instance.

    The channel is described by the single normalized reference SNR
    ``gamma0`` (linear, per power-unit at 1 m), so the path-loss constant
    and the noise power never appear separately.  Energies are in
    power-units x slots; with the CLI's watt convention E = N * P_watt.
    """

    L: float                 # horizontal S-D distance, m
    H: float                 # UAV altitude, m
    T: float                 # flight period, s
    N: int                   # number of time slots
    V_u: float               # maximum UAV speed, m/s
    gamma0: float            # reference SNR at 1 m, linear
    E_s: float               # source energy budget
    E_u: float               # UAV energy budget
    endpoints: FixedEndpoints | None = None   # None = free endpoints
    D_m: int | None = None   # max buffering delay in slots, None = unbounded
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        errors = []
        if self.N < 1:
            errors.append("N must be >= 1")
        for name in ("L", "H", "V_u", "gamma0", "E_s", "E_u", "T"):
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be > 0")
        if self.D_m is not None and self.D_m < 0:
            errors.append("D_m must be >= 0 when present")
        if errors:
            raise ValueError("invalid scenario: " + "; ".join(errors))

    @property
    def D_u(self) -> float:
        """Maximum per-slot displacement V_u * (T/N), meters."""
        return self.V_u * (self.T / self.N)

    @property
    def slot_duration(self) -> float:
        return self.T / self.N

    def with_delay(self, D_m: int | None) -> "ScenarioConfig":
        return replace(self, D_m=D_m)


@dataclass
class Trajectory:
    """Per-slot UAV waypoints (x[i], y[i]) at fixed altitude, shape (N, 2)."""

    xy: np.ndarray

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=float)
        if self.xy.ndim != 2 or self.xy.shape[1] != 2:
            raise ValueError("trajectory must have shape (N, 2)")

    def __len__(self) -> int:
        return self.xy.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.xy[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xy[:, 1]

    def copy(self) -> "Trajectory":
        return Trajectory(self.xy.copy())

    def max_constraint_violation(self, config: ScenarioConfig) -> float:
        """Worst squared-displacement excess over D_u^2 (negative = slack)."""
        du2 = config.D_u ** 2
        worst = -du2
        if len(self) > 1:
            d = np.diff(self.xy, axis=0)
            worst = max(worst, float(np.max(np.sum(d * d, axis=1))) - du2)
        if config.endpoints is not None:
            d0 = self.xy[0] - config.endpoints.start
            dF = config.endpoints.end - self.xy[-1]
            worst = max(worst, float(d0 @ d0) - du2, float(dF @ dF) - du2)
        return worst

    def is_feasible(self, config: ScenarioConfig) -> bool:
        """Speed constraints within the standard feasibility slack."""
        if len(self) != config.N:
            return False
        du2 = config.D_u ** 2
        return self.max_constraint_violation(config) <= du2 * SPEED_FEAS_RTOL


def straight_line_trajectory(config: ScenarioConfig) -> Trajectory:
    """Straight-line initialization: S to D for free endpoints, otherwise the
    line between the fixed launch and landing locations."""
    if config.endpoints is None:
        p0 = np.array([0.0, 0.0])
        pF = np.array([config.L, 0.0])
    else:
        p0 = config.endpoints.start
        pF = config.endpoints.end
    if config.N == 1:
        xy = (0.5 * (p0 + pF))[None, :]
    else:
        frac = np.linspace(0.0, 1.0, config.N)[:, None]
        xy = p0[None, :] * (1.0 - frac) + pF[None, :] * frac
    traj = Trajectory(xy)
    if not traj.is_feasible(config):
        raise ValueError(
            "straight-line initialization infeasible: endpoints farther apart "
            "than the UAV can travel in the flight period"
        )
    return traj
