import pytest

from crowdpolicy import demo_scenario_path, load_scenario

#: One line per acceptance criterion, filled in by tests/test_acceptance.py
#: and echoed after the run so the verdicts survive output capturing.
ACCEPTANCE_VERDICTS: list[str] = []


@pytest.fixture(scope="session")
def demo():
    """The bundled six-node road-network scenario."""
    return load_scenario(demo_scenario_path())


@pytest.fixture(scope="session")
def verdicts():
    return ACCEPTANCE_VERDICTS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)
