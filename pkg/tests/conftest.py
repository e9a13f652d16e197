import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdict lines, which per-test capture would
    otherwise hide on success."""
    for name, module in sys.modules.items():
        if name.rpartition(".")[2] == "test_acceptance":
            verdicts = getattr(module, "VERDICTS", None)
            if verdicts:
                terminalreporter.section("acceptance criteria")
                for line in verdicts:
                    terminalreporter.write_line(line)
            return
