import pytest

from overspec.scenario import default_scenario

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def cfg():
    return default_scenario()


@pytest.fixture
def criterion():
    """Record an acceptance verdict: ``criterion(n, ok, detail)`` then assert."""
    def record(n: int, ok: bool, detail: str) -> None:
        _CRITERIA[n] = (bool(ok), detail)
        assert ok, f"criterion {n}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
