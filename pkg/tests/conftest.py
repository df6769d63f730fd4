"""Shared test plumbing: the acceptance-criterion recorder.

Acceptance tests report through record_acceptance so every criterion emits
exactly one PASS/FAIL line, echoed both into captured stdout and into the
terminal summary (which pytest never swallows).
"""

ACCEPTANCE_LINES = []


def record_acceptance(index: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {index} {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
