"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

The lines are printed by each test (visible with ``-s``) and collected into
an ``acceptance criteria`` section of the terminal summary.  Run this file
directly to print the lines without pytest.
"""

import pytest

from singularpde.suites import SUITES, run_suite

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}


def run_and_record(name):
    res = run_suite(name)
    lines = [res.headline(), *res.lines()]
    ACCEPTANCE_LINES[res.criterion] = lines
    print("\n".join(lines))
    return res


@pytest.mark.slow
@pytest.mark.parametrize("name", list(SUITES))
def test_acceptance(name):
    res = run_and_record(name)
    failing = [c.summary() for c in res.checks if not c.passed]
    assert res.passed, "; ".join(failing)


if __name__ == "__main__":
    for suite in SUITES:
        run_and_record(suite)
