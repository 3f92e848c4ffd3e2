import pytest

from supnorm.order_lattice import disc6_order, standard_order
from supnorm.quat_core import AlgebraParams

# one pass/fail line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def alg():
    return AlgebraParams(3, -1)


@pytest.fixture(scope="session")
def order():
    return disc6_order()


@pytest.fixture(scope="session")
def std_order(alg):
    return standard_order(alg)


GENERIC_Z = (0.31, 1.17)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
