"""Shared fixtures and the acceptance summary printed at the end of a run."""

from pathlib import Path

import pytest

from elk.thermo import PhysicalConstants

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "scenarios"

#: (criterion number, title, passed, detail), filled by test_acceptance
ACCEPTANCE: list = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE.append((number, title, passed, detail))
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}")


@pytest.fixture
def unit():
    return PhysicalConstants.unit()


@pytest.fixture
def demos_dir():
    return DEMOS
