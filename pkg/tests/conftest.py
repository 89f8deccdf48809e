CRITERIA: list[tuple[str, str, str]] = []


def record_criterion(name: str, ok: bool, detail: str = "") -> None:
    CRITERIA.append((name, "PASS" if ok else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status, detail in CRITERIA:
            terminalreporter.write_line(f"[{status}] {name}: {detail}")
