import math

import pytest
from hypothesis import HealthCheck, settings

from deepstokes.grid import build_grid

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_grids():
    """Coarse 2-D grids keyed by spec name; cached across the session."""
    from cases import SPECS

    return {name: build_grid(16, 16, 64, 8 * math.pi, spec) for name, spec in SPECS.items()}


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = {}


@pytest.fixture
def verdict():
    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()
        ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
