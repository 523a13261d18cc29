import pytest

from attractorlab import Biangle, Loop, ModifiedBowen, SaddleNodeParams, SaddleParams


@pytest.fixture
def biangle4():
    return Biangle(SaddleParams(2.0, 1.0, 1.0), SaddleParams(2.0, 1.0, 1.0))


@pytest.fixture
def biangle6():
    return Biangle(SaddleParams(2.0, 1.0, 1.0), SaddleParams(3.0, 1.0, 1.0))


@pytest.fixture
def mbe():
    return ModifiedBowen(SaddleNodeParams(1.0, 1.0), SaddleParams(2.0, 1.0, 1.0))


@pytest.fixture
def loop2():
    return Loop(SaddleParams(2.0, 1.0, 1.0), 1.0)



_ACCEPTANCE_LINES: list = []


@pytest.fixture
def criterion(capsys):
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
