import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def record():
    """Record one acceptance line; the lines are echoed in the terminal summary."""

    def _record(criterion: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
