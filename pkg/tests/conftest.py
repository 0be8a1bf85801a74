"""
Pytest configuration and fixtures for droop-sim tests.
"""
import pytest
from typing import Any, Dict

from app.sim.logic import L0, L1
from app.sim.timing import NS, TimingProfile
from app.sim.waveform import Waveform, clock_waveform

PERIOD = 50 * NS


@pytest.fixture
def period() -> int:
    """Output clock period T in femtoseconds."""
    return PERIOD


@pytest.fixture
def ideal_timing() -> TimingProfile:
    """1 ps gates and latches, no window, no variation."""
    return TimingProfile.ideal(PERIOD)


@pytest.fixture
def default_timing() -> TimingProfile:
    """Nominal 50 ps gates, 80 ps clock-to-q, 20 ps setup/hold."""
    return TimingProfile(period=PERIOD)


@pytest.fixture
def module_clock():
    """Factory for a clean module input clock: rising every T from t=T."""
    def make(cycles: int = 12, high: int = PERIOD // 2) -> Waveform:
        return clock_waveform(PERIOD, high, PERIOD * cycles, phase=PERIOD)
    return make


@pytest.fixture
def no_droop() -> Waveform:
    return Waveform(L1)


@pytest.fixture
def stable_droop() -> Waveform:
    return Waveform(L0)


@pytest.fixture
def element_scenario() -> Dict[str, Any]:
    """Small idealized delay-element scenario document."""
    return {
        "name": "element-smoke",
        "topology": "delay-element",
        "period": "50ns",
        "cycles": 8,
        "idealized": True,
    }


@pytest.fixture
def system_scenario() -> Dict[str, Any]:
    """Idealized closed-loop scenario without droop."""
    return {
        "name": "system-smoke",
        "topology": "full-system",
        "period": "50ns",
        "cycles": 30,
        "idealized": True,
    }


@pytest.fixture
def artifacts_dir(tmp_path, monkeypatch):
    """Point ARTIFACTS_DIR at a temporary directory."""
    from app.core.config import settings

    monkeypatch.setattr(settings, "ARTIFACTS_DIR", str(tmp_path))
    return tmp_path


@pytest.fixture
def fresh_cache(monkeypatch):
    """A new in-memory report cache instead of the process-wide one."""
    from app.utils import report_cache

    monkeypatch.setattr(report_cache, "_report_cache", None)
    yield report_cache.get_cache()
    monkeypatch.setattr(report_cache, "_report_cache", None)


@pytest.fixture
def test_client(fresh_cache):
    """FastAPI test client."""
    from fastapi.testclient import TestClient
    from app.main import app

    with TestClient(app) as client:
        yield client


@pytest.fixture
def async_test_client(fresh_cache):
    """Async FastAPI test client for async tests."""
    from httpx import AsyncClient, ASGITransport
    from app.main import app

    return AsyncClient(transport=ASGITransport(app=app), base_url="http://test")
