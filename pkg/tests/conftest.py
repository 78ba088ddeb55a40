import numpy as np
import pytest

import _gate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if _gate.lines:
        terminalreporter.section("acceptance gate")
        for line in _gate.lines:
            terminalreporter.write_line(line)
