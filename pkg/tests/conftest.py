import pytest

_LINES = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(cid, ok, detail):
        line = f"criterion {cid}: {'PASS' if ok else 'FAIL'} | {detail}"
        _LINES[cid] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(_LINES):
            terminalreporter.write_line(_LINES[cid])
