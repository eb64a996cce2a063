import sys

import pytest

from credalnet.ccm import apply_ccm
from credalnet.generate import random_corpus

from helpers import net_b


@pytest.fixture
def netb():
    return net_b()


@pytest.fixture
def netb_t():
    net, specs = net_b()
    return apply_ccm(net, specs)


@pytest.fixture(scope="session")
def small_corpus():
    return random_corpus(7, 40, max_vars=6, max_credal=3, max_vertices=3)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
