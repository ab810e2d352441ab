import pytest

ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line, then assert it."""
    def _report(k, ok, detail):
        ACCEPTANCE.append((k, bool(ok), detail))
        assert ok, f"criterion {k}: {detail}"
    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
