import pytest

_LINES = []


@pytest.fixture
def report():
    """Record and print one ``[PASS]``/``[FAIL]`` line per acceptance criterion.

    Lines are also repeated in the terminal summary so they show up even
    when output capture is on.
    """

    def _report(tag, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        _LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
