import sys

import pytest

from faircrowd import pvas
from faircrowd.groupmath import Rng


@pytest.fixture(scope="session")
def params1():
    return pvas.par_gen(256, 1, value_bound=2 ** 16)


@pytest.fixture(scope="session")
def params3():
    return pvas.par_gen(256, 3, value_bound=2 ** 16)


@pytest.fixture
def rng():
    return Rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.line(k))
