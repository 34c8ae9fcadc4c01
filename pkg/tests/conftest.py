import pytest

ACCEPTANCE = {}
N_CRITERIA = 12


@pytest.fixture
def record_criterion():
    """record_criterion(number, title, ok, detail) -> stores the line and asserts ok."""
    def _record(number, title, ok, detail=""):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}) failed: {detail}"
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, N_CRITERIA + 1):
        title, ok, detail = ACCEPTANCE.get(number, ("(no result)", False, "test errored or was skipped"))
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
