import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def record_acceptance(num: int, name: str, ok: bool, detail: str = "") -> None:
    """Register one acceptance criterion outcome and assert it."""
    ACCEPTANCE_RESULTS.append((num, name, ok, detail))
    suffix = f" ({detail})" if detail else ""
    line = f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'}{suffix}"
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_RESULTS):
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(
            f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'}{suffix}"
        )
