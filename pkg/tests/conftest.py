import numpy as np
import pytest

from rsembed.numerics import RngStream

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion (shown in the terminal summary)."""
    def _report(tag: str, ok: bool, detail: str):
        line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)


@pytest.fixture
def stream():
    return RngStream(1234, 0)
