"""Causal time-slot pairing: maximum-weight partial matching between
receive slots and transmit slots."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel import RateMatrix
from .scenario import ScenarioConfig


@dataclass
class Pairing:
    """Set of (i, j) slot pairs, 1-based, receive slot i and transmit slot j."""

    pairs: list = field(default_factory=list)

    def __post_init__(self):
        self.pairs = sorted((int(i), int(j)) for i, j in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def receive_slots(self) -> np.ndarray:
        return np.array([i for i, _ in self.pairs], dtype=int)

    def transmit_slots(self) -> np.ndarray:
        return np.array([j for _, j in self.pairs], dtype=int)

    def delays(self) -> np.ndarray:
        """Buffering delay j - i per pair, in slots."""
        return np.array([j - i for i, j in self.pairs], dtype=int)

    def total_rate(self, rates: RateMatrix) -> float:
        return float(sum(rates.R[i - 1, j - 1] for i, j in self.pairs))


def identity_pairing(N: int) -> Pairing:
    return Pairing([(k, k) for k in range(1, N + 1)])


def validate(p: Pairing, config: ScenarioConfig) -> bool:
    """Check causality, optional delay bound and one-to-one matching."""
    seen_i, seen_j = set(), set()
    for i, j in p.pairs:
        if not (1 <= i <= config.N and 1 <= j <= config.N):
            return False
        if j < i:
            return False
        if config.D_m is not None and j - i > config.D_m:
            return False
        if i in seen_i or j in seen_j:
            return False
        seen_i.add(i)
        seen_j.add(j)
    return True


def solve_pairing(rates: RateMatrix) -> Pairing:
    """Optimal causal partial matching maximizing the summed rate.

    The assignment problem is solved on a dummy-augmented 2N x 2N matrix so
    that any slot may stay unmatched at zero weight; a plain perfect-matching
    Hungarian solve would be suboptimal whenever skipping a slot pays off.
    Among optimal solutions, smaller total delay is preferred (second solve
    with an infinitesimal delay penalty, kept only if it ties the optimum).
    """
    R = np.asarray(rates.R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] == 0:
        raise ValueError("rate matrix must be square and non-empty")
    N = R.shape[0]
    defined = ~np.isnan(R)
    if not defined.diagonal().all():
        raise ValueError("rate matrix must define at least the diagonal")
    if np.any(R[defined] < 0) or not np.all(np.isfinite(R[defined])):
        raise ValueError("defined rates must be finite and non-negative")

    best = _assignment(R, defined, delay_penalty=0.0)
    value = _pair_value(R, best)

    # Delay tie-break: re-solve with a tiny penalty on j - i and keep the
    # result only when it provably attains the same objective.
    scale = float(R[defined].max(initial=0.0)) + 1.0
    penalty = 1e-12 * scale / (N * N)
    tied = _assignment(R, defined, delay_penalty=penalty)
    if _pair_value(R, tied) == value:
        return tied
    return best


def _pair_value(R: np.ndarray, p: Pairing) -> float:
    return float(sum(R[i - 1, j - 1] for i, j in p.pairs))


def _assignment(R: np.ndarray, defined: np.ndarray, delay_penalty: float) -> Pairing:
    N = R.shape[0]
    # Forbidden real-real entries get a weight below any achievable total so
    # the dummy (zero-weight) alternative always wins.
    big_neg = -(float(np.abs(R[defined]).sum()) + 1.0)
    W = np.full((2 * N, 2 * N), 0.0)
    real = np.where(defined, R, big_neg)
    if delay_penalty > 0.0:
        i = np.arange(N)
        real = real - delay_penalty * (i[None, :] - i[:, None])
    W[:N, :N] = real
    # Each real row/column may only use its own dummy partner.
    W[:N, N:] = big_neg
    W[N:, :N] = big_neg
    W[:N, N:][np.diag_indices(N)] = 0.0
    W[N:, :N][np.diag_indices(N)] = 0.0
    rows, cols = linear_sum_assignment(W, maximize=True)
    pairs = [
        (int(r) + 1, int(c) + 1)
        for r, c in zip(rows, cols)
        if r < N and c < N and defined[r, c]
    ]
    return Pairing(pairs)
