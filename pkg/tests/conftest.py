import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from supplynet.planner import plan  # noqa: E402
from supplynet.scenarios import SCENARIOS, ScenarioConfig, reference_network, run_scenario  # noqa: E402

CRITERIA: dict[int, str] = {}


@pytest.fixture(scope="session")
def reference():
    net = reference_network()
    return net, plan(net)


@pytest.fixture(scope="session")
def reports(reference):
    _, baseline = reference
    return {name: run_scenario(ScenarioConfig(event=name), baseline) for name in SCENARIOS}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
