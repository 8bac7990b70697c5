import numpy as np
import pytest

from qlangevin.smatrix import PerfectReflector, ResonanceCutoff


@pytest.fixture(scope="session")
def resonance():
    return ResonanceCutoff(1.0)


@pytest.fixture(scope="session")
def perfect():
    return PerfectReflector()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    """Store one pass/fail line for the end-of-run acceptance summary."""
    ACCEPTANCE_LINES[number] = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
