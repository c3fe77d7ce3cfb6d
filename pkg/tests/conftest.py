import pytest

# criterion number -> (passed, detail), filled by the acceptance suite
ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    def _record(number: int, passed: bool, detail: str):
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
