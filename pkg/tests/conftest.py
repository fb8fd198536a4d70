import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance_log():
    """Record the one-line verdict of an acceptance criterion."""

    def log(number: int, title: str, passed: bool, detail: str = "") -> None:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE[number] = line
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
