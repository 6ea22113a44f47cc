ACCEPTANCE_LINES = []


def record(criterion: str, passed: bool, message: str) -> str:
    line = f"criterion {criterion:<4} {'PASS' if passed else 'FAIL'}  {message}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
