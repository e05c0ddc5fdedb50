import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from driftsfc.network import NetworkGraph, graph_family

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


@pytest.fixture(scope="session")
def family():
    return graph_family()


@pytest.fixture(scope="session")
def g0(family):
    return family["G0"]


def two_node(c0=6, c1=5, bw=4, graph_id="two"):
    return NetworkGraph(cpu={0: c0, 1: c1}, region={0: "access", 1: "access"}, bw={(0, 1): bw}, graph_id=graph_id)


def line3(cpu=(10, 10, 10), bw=(10, 10)):
    return NetworkGraph(
        cpu={0: cpu[0], 1: cpu[1], 2: cpu[2]},
        region={0: "access", 1: "core", 2: "access"},
        bw={(0, 1): bw[0], (1, 2): bw[1]},
        graph_id="line3",
    )


def tiny_instance(graph=None):
    """2 nodes, 1 link, 2 scripted requests, horizon 6: small enough for exhaustive search.

    The optimum packs the first chain on node 0 so the second still fits;
    the NF heuristic spreads it and loses the second request.
    """
    from driftsfc.mdp import RewardParams, SfcMdp
    from driftsfc.workload import SfcRequest

    g = graph or two_node(c0=6, c1=5, bw=2, graph_id="tiny")
    r0 = SfcRequest(0, 0, 1, (2, 2, 2), (1, 1), 0, 3, 3)
    r1 = SfcRequest(1, 1, 0, (2, 2, 1), (1, 1), 1, 3, 4)
    return SfcMdp(g, [r0, r1], reward=RewardParams(gamma=0.8), horizon_end=6)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
