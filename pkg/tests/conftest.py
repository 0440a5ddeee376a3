"""Shared test configuration.

The acceptance tests record one scoreboard line each; the terminal summary
hook prints them at the end of every run so the pass/fail status of each
behaviour target is visible without digging through tracebacks.
"""

from hypothesis import settings

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")

_CRITERION_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:02d}: {'PASS' if ok else 'FAIL'} - {detail}"
    _CRITERION_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERION_LINES):
            terminalreporter.write_line(_CRITERION_LINES[number])
