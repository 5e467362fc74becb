from pathlib import Path

import pytest

from qwl.hamiltonian import HamiltonianSpec, solve

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def n4_spectrum():
    return solve(HamiltonianSpec(4, 2.0, 1.0))


@pytest.fixture(scope="session")
def n2_spectrum():
    return solve(HamiltonianSpec(2, 2.0, 1.0))


REPORT: list[str] = []


def report(criterion: int, title: str, passed: bool, detail: str) -> bool:
    line = f"criterion {criterion:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    REPORT.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
