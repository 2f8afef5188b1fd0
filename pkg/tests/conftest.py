import acceptance_log


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in acceptance_log.lines():
        terminalreporter.write_line(line)
