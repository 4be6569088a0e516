"""Prints the binding acceptance line collected during the run."""


def pytest_terminal_summary(terminalreporter):
    try:
        import test_bindings
    except ImportError:
        return
    if test_bindings.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_bindings.REPORT:
            terminalreporter.write_line(line)
