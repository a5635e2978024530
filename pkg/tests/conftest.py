import pytest

_LINES: dict = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion and fail the test if it did not pass."""
    def record(number, ok, detail):
        line = "CRITERION %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail)
        print(line)
        _LINES[number] = line
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
