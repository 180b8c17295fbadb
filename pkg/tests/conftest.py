import numpy as np
import pytest

from aoisched import LoopModel, NetworkConfig

FIVE_LOOP_A = (1.1, 1.3, 1.5, 1.7, 1.9)


def scalar_loop(a, p=0.9, sigma=1.0, name=""):
    return LoopModel(A=a, B=1.0, Sigma=sigma, L=a, p=p, name=name)


@pytest.fixture
def five_loops():
    return [scalar_loop(a, 0.9, name=f"loop{i + 1}") for i, a in enumerate(FIVE_LOOP_A)]


@pytest.fixture
def fig3_loops():
    return [scalar_loop(1.1, 0.5), scalar_loop(1.3, 0.5)]


@pytest.fixture
def fig3_net():
    return NetworkConfig(N=2, R=1, M=7)


@pytest.fixture
def rng():
    return np.random.default_rng(20191231)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_criterion(number, title, failures, details=""):
    status = "PASS" if not failures else "FAIL"
    line = f"[{status}] criterion {number}: {title}"
    if details:
        line += f" | {details}"
    if failures:
        line += " | failed: " + "; ".join(failures)
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert not failures, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
