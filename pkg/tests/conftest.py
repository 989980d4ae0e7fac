from __future__ import annotations

import os
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from cartan_dual.cli.main import fixture_path
from cartan_dual.cli.spec import load_spec

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True)
settings.register_profile("thorough", parent=settings.get_profile("default"), max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = ("minkowski", "schwarzschild", "desitter", "torsionful-minkowski")


@lru_cache(maxsize=None)
def structure(name: str):
    """Bundled fixture loaded once per session; geometry objects cache their derived fields."""
    return load_spec(fixture_path(name))


@pytest.fixture(params=FIXTURES)
def any_fixture(request):
    return structure(request.param)


@pytest.fixture
def schwarzschild():
    return structure("schwarzschild")


@pytest.fixture
def minkowski():
    return structure("minkowski")


@pytest.fixture
def desitter():
    return structure("desitter")


@pytest.fixture
def torsionful():
    return structure("torsionful-minkowski")


# criterion number -> (verdict, detail), filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {verdict}  {detail}")
