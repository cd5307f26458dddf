"""Shared test hooks: the acceptance verdict summary."""
import pytest

_VERDICTS = []


@pytest.fixture(scope="session")
def verdict():
    """Record one ``PASS``/``FAIL`` line for an acceptance criterion.

    Call as ``verdict(name, ok, detail)``; the line is printed at once and
    again in the terminal summary, so it shows with or without ``-s``.
    """

    def record(name: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
