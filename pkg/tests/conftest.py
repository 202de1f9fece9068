import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cdii.field_core import Grid2D, ScalarField

settings.register_profile("cdii", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cdii")

ACCEPTANCE_LINES = []


@pytest.fixture
def unit33():
    return Grid2D.square(33)


@pytest.fixture
def field():
    def make(grid, fn):
        return ScalarField.from_function(grid, fn)

    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
