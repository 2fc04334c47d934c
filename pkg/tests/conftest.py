ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line("  " + line)
