import pytest

_LINES = []


@pytest.fixture
def criterion():
    """record(number, passed, detail, seconds): print and keep a one-line verdict."""

    def record(number, passed, detail, seconds):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail} ({seconds:.2f} s)"
        print(line)
        _LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: float(s.split()[2].rstrip(":").rstrip("ab"))):
            terminalreporter.write_line(line)
