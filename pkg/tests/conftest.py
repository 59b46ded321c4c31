import pytest

from singularpde import build_grid

# criterion -> headline line, filled by test_acceptance
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def square16():
    return build_grid("unit-square", 16)


@pytest.fixture(scope="session")
def disk64():
    return build_grid("unit-disk", 64)


@pytest.fixture(scope="session")
def ball100():
    return build_grid("unit-ball-radial(3)", 100)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE_LINES):
        for line in ACCEPTANCE_LINES[crit]:
            terminalreporter.write_line(line)
