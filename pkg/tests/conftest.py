import pytest

_RESULTS: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def acceptance():
    """``acceptance(criterion, ok, detail, part="")`` records one acceptance check."""

    def record(criterion: int, ok: bool, detail: str, part: str = "") -> bool:
        _RESULTS.setdefault(criterion, []).append((part, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_RESULTS):
        parts = _RESULTS[criterion]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name + ': ' if name else ''}{'ok' if good else 'FAIL'} ({text})"
                           for name, good, text in parts)
        terminalreporter.write_line(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
