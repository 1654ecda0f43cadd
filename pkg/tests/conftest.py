"""Shared fixtures.

The n=100 backward recursion at default settings takes ~30s, so it runs once
per session and every test that needs value grids (cross-checks, negativity
scans, growth bounds, hedging identities) reads from the same history.
"""
from __future__ import annotations

import numpy as np
import pytest

from discrete_hedge import (
    LognormalParams,
    MarketPath,
    PriceGrid,
    PricingKernel,
    price_recursive,
)

BASE = dict(mean_rate=0.05, vol=0.2, tau=0.01, rate=0.09)
STRIKE = 100.0
N_STEPS = 100


@pytest.fixture(scope="session")
def params() -> LognormalParams:
    return LognormalParams(**BASE)


@pytest.fixture(scope="session")
def path100(params: LognormalParams) -> MarketPath:
    return params.to_path(N_STEPS)


@pytest.fixture(scope="session")
def kern(params: LognormalParams) -> PricingKernel:
    return PricingKernel.from_step(params.to_step())


@pytest.fixture(scope="session")
def payoff_grid() -> PriceGrid:
    return PriceGrid.call_payoff(STRIKE, span=4.0, n_nodes=2048)


@pytest.fixture(scope="session")
def history100(path100: MarketPath) -> list[PriceGrid]:
    """Grids V_0 (payoff) .. V_100 at default engine settings."""
    return price_recursive(path100, STRIKE, keep_history=True)


@pytest.fixture(scope="session")
def grid100(history100: list[PriceGrid]) -> PriceGrid:
    return history100[-1]
