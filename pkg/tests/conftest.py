import numpy as np
import pytest

from phdae.pendulum import PendulumParams, build_implicit, hanging_state, pendulum_method, swinging_state

# (criterion, passed, detail) rows collected by the acceptance suite
ACCEPTANCE = []


def record(criterion, passed, detail):
    ACCEPTANCE.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE, key=lambda row: int(row[0][2:])):
        terminalreporter.write_line(f"{criterion}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def params():
    return PendulumParams()


@pytest.fixture(scope="session")
def pend(params):
    return build_implicit(params)


@pytest.fixture(scope="session")
def method(params):
    return pendulum_method(params)


@pytest.fixture(scope="session")
def hanging(params):
    return hanging_state(params)


@pytest.fixture(scope="session")
def swinging(params):
    return swinging_state(params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
