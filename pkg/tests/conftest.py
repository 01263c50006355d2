import sys

import pytest

from clsc import SymmetricScenario
from clsc.oracle import rng


@pytest.fixture
def base():
    return SymmetricScenario.baseline()


@pytest.fixture
def market(base):
    return base.market()


@pytest.fixture
def chain(base):
    return base.chain()


@pytest.fixture
def gen():
    return rng(42)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[n])
