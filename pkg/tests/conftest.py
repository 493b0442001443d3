import pytest

from vortexlab.model import ModelParams
from vortexlab.shoot import find_a

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def case_iv_hit():
    p = ModelParams(1.0, 0.5, 1)
    return p, find_a(p, 1, (0.1, 10.0))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
