"""Shared simulation fixtures (session-scoped: runs are reused across tests)."""

import pytest

from photonsync.engine import run_sim
from photonsync.params import SystemConfig


@pytest.fixture(scope="session")
def sim_record_sync():
    """Synchronized run at the low-rate operating point."""
    return run_sim(SystemConfig(), seed=2024, duration_s=20.0)
