"""Shared fixtures: worker count and memoized heavy Monte Carlo runs."""

from __future__ import annotations

import multiprocessing

import pytest

WORKERS = min(2, multiprocessing.cpu_count())


@pytest.fixture(scope="session")
def workers() -> int:
    return WORKERS


@pytest.fixture(scope="session")
def mc_m1_estimates(workers):
    """Mean-law / dual-route Monte Carlo runs for m = 1 (shared across tests)."""
    from ksslab.rootcount import estimate_moments

    return {
        d: estimate_moments(1, d, 10_000, seed=0xA11CE, workers=workers)
        for d in (2, 10, 50, 200)
    }


@pytest.fixture(scope="session")
def mc_m2_estimates(workers):
    """Mean-law Monte Carlo runs for m = 2 (verified subdivision counts)."""
    from ksslab.rootcount import estimate_moments

    return {
        d: estimate_moments(2, d, 2_000, seed=0xB0B, workers=workers)
        for d in (2, 3, 5)
    }
