import os

import pytest
from hypothesis import HealthCheck, settings

from bgpolymer.models import ModelSpec

from _acceptance_log import LINES

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

REFERENCE = {
    "ig": ModelSpec("ig", 2.0, 1.0, 1.0),
    "g": ModelSpec("g", 1.0, 0.5, 1.0),
    "b": ModelSpec("b", 1.0, 0.5, 1.0),
    "ib": ModelSpec("ib", 2.0, 0.5, 1.0),
}


@pytest.fixture(params=sorted(REFERENCE))
def ref_spec(request):
    return REFERENCE[request.param]


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
