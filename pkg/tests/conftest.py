import pytest

_LINES: list = []


@pytest.fixture(scope="session")
def criterion_log():
    """Collect one summary line per acceptance criterion."""
    def log(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _LINES.append((number, line))
    return log


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
