import pytest

CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    def record(name: str, passed: bool, detail: str = "") -> None:
        CRITERIA[name] = (passed, detail)
        print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, (passed, detail) in CRITERIA.items():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
