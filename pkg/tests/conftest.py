import pytest

from coopnet.network import build_sioux_falls
from coopnet.params import ServiceParams
from coopnet.scenario import ScenarioConfig
from coopnet.toys import toy_graph

TOY_PARAMS = ServiceParams(kappa=300, s_max=2)
TOY_BOUNDS = {t: (200, 600) for t in ("intra1", "intra2", "inter1", "inter2")}


@pytest.fixture(scope="session")
def sioux():
    return build_sioux_falls()


@pytest.fixture(scope="session")
def toy_network():
    return toy_graph((2.0, 3.0, 2.0), TOY_PARAMS)


@pytest.fixture
def toy_config():
    """Small four-node scenario where most schedules lead to accepted cooperation."""
    return ScenarioConfig(name="toy", budget=3000.0, params=TOY_PARAMS, bounds=dict(TOY_BOUNDS),
                          beta_grid=(0.0, 0.5, 0.9))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion and show it immediately."""

    def _report(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" | {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print("\n" + line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
