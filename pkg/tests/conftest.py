import numpy as np
import pytest

from risvlc.scenario import build_default_scenario


@pytest.fixture
def desk():
    return build_default_scenario({"K": 30, "U": 2}, seed=1)


@pytest.fixture
def tiny():
    """Four elements, two users, everyone facing up."""
    return build_default_scenario({"K": 4, "U": 2, "orientation_kind": "fixed"}, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
