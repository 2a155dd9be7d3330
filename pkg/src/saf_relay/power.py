"""Source/UAV power allocation via SCA in the reciprocal variables, with the
closed-form KKT solution of each convexified subproblem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelGains
from .pairing import Pairing

LN2 = np.log(2.0)
ENERGY_RTOL = 1e-9


@dataclass
class PowerProfile:
    """Per-slot source and UAV transmit powers, length N each."""

    P_s: np.ndarray
    P_u: np.ndarray

    def __post_init__(self):
        self.P_s = np.asarray(self.P_s, dtype=float)
        self.P_u = np.asarray(self.P_u, dtype=float)
        if self.P_s.shape != self.P_u.shape or self.P_s.ndim != 1:
            raise ValueError("P_s and P_u must be 1-D arrays of equal length")

    def is_feasible(self, E_s: float, E_u: float) -> bool:
        if np.any(self.P_s < 0) or np.any(self.P_u < 0):
            return False
        return (self.P_s.sum() <= E_s * (1 + ENERGY_RTOL)
                and self.P_u.sum() <= E_u * (1 + ENERGY_RTOL))

    def copy(self) -> "PowerProfile":
        return PowerProfile(self.P_s.copy(), self.P_u.copy())


def uniform_powers(N: int, E_s: float, E_u: float) -> PowerProfile:
    return PowerProfile(np.full(N, E_s / N), np.full(N, E_u / N))


@dataclass
class ScaCoefficients:
    """Per-pair linearization coefficients of the reciprocal-variable rate.

    A_s[k] (A_u[k]) is minus the partial derivative of the rate of pair k
    with respect to the source (UAV) reciprocal power at the expansion point;
    both are strictly positive for every matched pair.
    """

    A_s: np.ndarray
    A_u: np.ndarray


def pair_gains(pairing: Pairing, gains: ChannelGains):
    """(rho_s[i], rho_u[j]) aligned with the pairing's pair order."""
    ri = pairing.receive_slots() - 1
    tj = pairing.transmit_slots() - 1
    return gains.rho_s[ri], gains.rho_u[tj]


def pair_objective(pairing: Pairing, gains: ChannelGains, powers: PowerProfile) -> float:
    """True objective: summed rate over matched pairs at the given powers."""
    rho_s, rho_u = pair_gains(pairing, gains)
    a = powers.P_s[pairing.receive_slots() - 1] * rho_s
    b = powers.P_u[pairing.transmit_slots() - 1] * rho_u
    return float(np.sum(np.log2(1.0 + a * b / (a + b + 1.0))))


def reciprocal_rate(T_s, T_u, rho_s, rho_u):
    """Rate of one pair as a function of the reciprocal powers."""
    denom = rho_u * T_s + rho_s * T_u + T_s * T_u
    return np.log2(1.0 + rho_s * rho_u / denom)


def sca_coefficients(pairing: Pairing, gains: ChannelGains,
                     local: PowerProfile) -> ScaCoefficients:
    """Tangent coefficients of the reciprocal-variable rate at `local`."""
    ri = pairing.receive_slots() - 1
    tj = pairing.transmit_slots() - 1
    Ps = local.P_s[ri]
    Pu = local.P_u[tj]
    if np.any(Ps <= 0) or np.any(Pu <= 0):
        raise ValueError("local powers must be strictly positive on matched slots")
    T_s = 1.0 / Ps
    T_u = 1.0 / Pu
    rho_s, rho_u = pair_gains(pairing, gains)
    # Powers heading to a zero boundary make T overflow; callers detect the
    # resulting non-finite coefficients and stop, so silence the warning.
    with np.errstate(over="ignore", invalid="ignore"):
        D = rho_u * T_s + rho_s * T_u + T_s * T_u
        A_s = rho_s * rho_u / (D * (T_s + rho_s) * LN2)
        A_u = rho_s * rho_u / (D * (T_u + rho_u) * LN2)
    return ScaCoefficients(A_s=A_s, A_u=A_u)


def closed_form_update(coeffs: ScaCoefficients, E_s: float, E_u: float,
                       pairing: Pairing, N: int) -> PowerProfile:
    """KKT solution of the linearized subproblem: T*_k proportional to
    1/sqrt(A_k), scaled so the energy constraint holds with equality.

    Unmatched slots receive zero power; each matched receive (transmit) slot
    appears in exactly one pair, so the per-slot coefficient row-sum is just
    that pair's coefficient.
    """
    if len(pairing) == 0:
        raise ValueError("closed-form update needs at least one matched pair")
    sqrt_As = np.sqrt(coeffs.A_s)
    sqrt_Au = np.sqrt(coeffs.A_u)
    # T*_k = sum_k' sqrt(A_k') / (E * sqrt(A_k)); powers are the reciprocals.
    Ps_pairs = E_s * sqrt_As / sqrt_As.sum()
    Pu_pairs = E_u * sqrt_Au / sqrt_Au.sum()
    P_s = np.zeros(N)
    P_u = np.zeros(N)
    P_s[pairing.receive_slots() - 1] = Ps_pairs
    P_u[pairing.transmit_slots() - 1] = Pu_pairs
    return PowerProfile(P_s, P_u)


def solve_power(pairing: Pairing, gains: ChannelGains, init: PowerProfile,
                E_s: float, E_u: float, tol: float = 1e-6,
                max_iter: int = 50):
    """SCA loop for the power subproblem.

    Returns (PowerProfile, trace) where trace holds the true summed rate per
    iteration (entry 0 is the initial point); the trace is non-decreasing.
    """
    if len(pairing) == 0:
        raise ValueError("power subproblem needs a non-empty pairing")
    if not init.is_feasible(E_s, E_u):
        raise ValueError("initial power profile violates the energy budgets")
    N = init.P_s.shape[0]
    current = init
    trace = [pair_objective(pairing, gains, current)]
    ri = pairing.receive_slots() - 1
    tj = pairing.transmit_slots() - 1
    for _ in range(max_iter):
        coeffs = sca_coefficients(pairing, gains, current)
        if (not np.all(np.isfinite(coeffs.A_s)) or np.any(coeffs.A_s <= 0)
                or not np.all(np.isfinite(coeffs.A_u)) or np.any(coeffs.A_u <= 0)):
            break     # a pair's power underflowed toward a boundary optimum
        nxt = closed_form_update(coeffs, E_s, E_u, pairing, N)
        if np.any(nxt.P_s[ri] <= 0) or np.any(nxt.P_u[tj] <= 0):
            break
        current = nxt
        obj = pair_objective(pairing, gains, current)
        trace.append(obj)
        prev = trace[-2]
        if abs(obj - prev) <= tol * max(1.0, abs(prev)):
            break
    return current, np.array(trace)
