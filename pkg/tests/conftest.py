import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from saf_relay import ScenarioConfig


def make_config(**overrides) -> ScenarioConfig:
    """Small default scenario for unit tests; override freely."""
    base = dict(L=2000.0, H=100.0, T=100.0, N=8, V_u=40.0,
                gamma0=1e8, E_s=8.0, E_u=8.0)
    base.update(overrides)
    return ScenarioConfig(**base)


def random_rate_matrix(rng: np.random.Generator, N: int,
                       D_m: int | None = None,
                       density: float = 1.0) -> np.ndarray:
    """Random non-negative causal rate matrix with NaN sentinels.

    `density` keeps each off-diagonal causal entry with that probability
    (the diagonal is always defined).
    """
    R = np.full((N, N), np.nan)
    for i in range(N):
        hi = N if D_m is None else min(N, i + 1 + D_m)
        for j in range(i, hi):
            if j == i or rng.random() < density:
                R[i, j] = rng.uniform(0.0, 10.0)
    return R


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
