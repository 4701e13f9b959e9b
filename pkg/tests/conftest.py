import pytest

from cvqkd_shotnoise.schedule import build_geometric_schedule


@pytest.fixture(scope="session")
def geo16():
    return build_geometric_schedule(16, 0.7, 1.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
