import pytest

_LINES: dict[str, str] = {}


@pytest.fixture
def record_criterion():
    """Record a one-line pass/fail verdict; all verdicts are printed in the terminal summary."""

    def record(key: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}"
        _LINES[key] = line
        print(line)

    return record


def _order(key: str):
    head, _, tail = key.partition(".")
    return int(head), tail


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_LINES, key=_order):
        terminalreporter.write_line(_LINES[key])
