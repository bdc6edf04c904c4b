import sys

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    sys.__stdout__.write(f"\n{line}\n")
    sys.__stdout__.flush()
