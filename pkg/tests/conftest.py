import pytest

REAL_S = (0.5, 1.0, 2.0, 3.0)
REAL_ALPHA = (0.5, 1.0, 2.0, 3.0)
COMPLEX_S, COMPLEX_ALPHA = 1 + 0.5j, 2 - 1j

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance_record():
    """Record one line per acceptance criterion, printed in the terminal summary."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE[name] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split()[1].rstrip(":"))):
        ok, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)
