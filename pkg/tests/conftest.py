"""Collects the acceptance verdict lines and repeats them in the summary."""
from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """``verdict(n, title, ok, detail)`` prints one PASS/FAIL line and asserts."""

    def record(n: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
