import pytest

_criteria: dict[int, str] = {}


@pytest.fixture
def report_criterion():
    """Record one pass/fail line per acceptance criterion; the test then
    asserts on the same outcome."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _criteria[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        terminalreporter.write_line(_criteria[number])
