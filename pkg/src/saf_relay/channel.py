"""Channel gains, end-to-end AF SNR and per-pair achievable rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ScenarioConfig, Trajectory


@dataclass
class ChannelGains:
    """Normalized per-slot gains: rho = gamma0 / squared-distance."""

    rho_s: np.ndarray   # source -> UAV, per receive slot
    rho_u: np.ndarray   # UAV -> destination, per transmit slot


@dataclass
class RateMatrix:
    """N x N matrix of per-pair rates in bps/Hz.

    Entries are defined for j >= i (and j <= i + D_m when delay-constrained);
    forbidden entries hold NaN as an explicit sentinel so consumers must
    branch rather than rely on -inf arithmetic.
    """

    R: np.ndarray

    @property
    def N(self) -> int:
        return self.R.shape[0]

    def defined(self) -> np.ndarray:
        """Boolean mask of the causal / delay-feasible entries."""
        return ~np.isnan(self.R)


def compute_gains(config: ScenarioConfig, traj: Trajectory) -> ChannelGains:
    """Free-space path-loss gains at every waypoint.

    rho_s[i] = gamma0 / (x[i]^2 + y[i]^2 + H^2)
    rho_u[j] = gamma0 / ((x[j]-L)^2 + y[j]^2 + H^2)
    """
    if len(traj) != config.N:
        raise ValueError("trajectory length does not match config.N")
    h2 = config.H ** 2
    d2_su = traj.x ** 2 + traj.y ** 2 + h2
    d2_ud = (traj.x - config.L) ** 2 + traj.y ** 2 + h2
    return ChannelGains(rho_s=config.gamma0 / d2_su, rho_u=config.gamma0 / d2_ud)


def snr_pair(P_s, P_u, rho_s, rho_u):
    """End-to-end AF SNR a*b / (a + b + 1) with a = P_s*rho_s, b = P_u*rho_u.

    Accepts scalars or broadcastable arrays; zero power on either hop gives
    zero SNR.
    """
    P_s, P_u, rho_s, rho_u = map(np.asarray, (P_s, P_u, rho_s, rho_u))
    if np.any(P_s < 0) or np.any(P_u < 0) or np.any(rho_s < 0) or np.any(rho_u < 0):
        raise ValueError("snr_pair arguments must be non-negative")
    a = P_s * rho_s
    b = P_u * rho_u
    out = a * b / (a + b + 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def pair_rates(P_s, P_u, rho_s, rho_u):
    """log2(1 + SNR) for paired slots, vectorized."""
    return np.log2(1.0 + snr_pair(P_s, P_u, rho_s, rho_u))


def rate_matrix(config: ScenarioConfig, traj: Trajectory, powers) -> RateMatrix:
    """Full reward matrix R[i][j] over causal (and delay-feasible) pairs.

    `powers` is a PowerProfile (power module); only its P_s / P_u vectors
    are used here.
    """
    N = config.N
    P_s = np.asarray(powers.P_s, dtype=float)
    P_u = np.asarray(powers.P_u, dtype=float)
    if P_s.shape != (N,) or P_u.shape != (N,):
        raise ValueError("power vectors must have length N")
    if np.any(P_s < 0) or np.any(P_u < 0):
        raise ValueError("powers must be non-negative")
    gains = compute_gains(config, traj)
    a = P_s * gains.rho_s          # receive-slot SNR contribution
    b = P_u * gains.rho_u          # transmit-slot SNR contribution
    snr = a[:, None] * b[None, :] / (a[:, None] + b[None, :] + 1.0)
    R = np.log2(1.0 + snr)
    R[~causal_mask(N, config.D_m)] = np.nan
    return RateMatrix(R)


def causal_mask(N: int, D_m: int | None = None) -> np.ndarray:
    """Mask of allowed (receive, transmit) index pairs: j >= i, j <= i + D_m."""
    i = np.arange(N)
    delay = i[None, :] - i[:, None]    # j - i
    mask = delay >= 0
    if D_m is not None:
        mask &= delay <= D_m
    return mask
