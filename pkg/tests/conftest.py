"""Shared test plumbing: surface acceptance-criterion results.

The acceptance tests register one human-readable pass/fail line per
criterion; pytest's capture would otherwise swallow them on success, so
they are replayed in a dedicated section of the terminal summary.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
