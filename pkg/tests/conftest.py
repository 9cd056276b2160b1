import pytest

ACCEPTANCE: dict = {}


def record(criterion: int, part: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))


@pytest.fixture
def report(capsys):
    def _report(criterion: int, part: str, ok: bool, detail: str):
        record(criterion, part, ok, detail)
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {part}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {d}" for name, _, d in parts)
        terminalreporter.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
