import pytest

_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome: ``criterion(name, ok, detail)``."""

    def record(name: str, ok: bool, detail: str) -> bool:
        _RESULTS[name] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_RESULTS):
        ok, detail = _RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
