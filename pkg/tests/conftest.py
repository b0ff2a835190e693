import _suite


def pytest_terminal_summary(terminalreporter):
    if _suite.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _suite.RESULTS:
            terminalreporter.write_line(line)
