"""Collects the acceptance verdicts and prints them at the end of the run."""

VERDICTS = []


def record(number: int, name: str, passed: bool, detail: str) -> bool:
    VERDICTS.append((number, name, passed, detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(VERDICTS):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}")
