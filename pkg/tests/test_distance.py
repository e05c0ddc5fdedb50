"""Estimated distance between SFC tasks on two graphs, and the toy MDPs used to check estimators."""

import numpy as np
import pytest

from driftsfc.distance import (
    INVALID, CalibrationFamily, EmpiricalModel, GraphView, collect_decisions, decision_samples, estimate_from_logs,
    random_perturbation, read_trajectory, record_trajectory, sfc_distance,
)
from driftsfc.mdp import PLACE, REJECT, WAIT, RewardParams, e2e_delay
from driftsfc.network import NetworkGraph
from driftsfc.toy import (
    TabularMdp, behavior_samples, exact_distance, perturbed, random_tabular, two_armed_bandit, uniform_samples,
)
from driftsfc.lifelong import estimate_distance
from driftsfc.workload import WorkloadSpec


@pytest.fixture(scope="module")
def fam():
    return CalibrationFamily()


@pytest.fixture(scope="module")
def base_decisions(fam):
    g = fam.base()
    return g, fam.decisions(g)


def _scaled(g, f, gid):
    return NetworkGraph(cpu={n: max(1, int(c * f)) for n, c in g.cpu.items()}, region=dict(g.region),
                        bw={k: max(1, int(b * f)) for k, b in g.bw.items()}, graph_id=gid)


def test_same_graph_is_zero(base_decisions):
    g, dec = base_decisions
    assert len(dec) > 20
    assert sfc_distance(dec, g, g) == 0.0


def test_decision_rewards_on_own_graph(base_decisions):
    g, dec = base_decisions
    view = GraphView(g)
    rp = RewardParams()
    for s, a in dec:
        r, key = view.outcome(s, a)
        assert key != INVALID
        if a.kind == REJECT:
            assert r == rp.blocking_penalty
        elif a.kind == WAIT:
            assert r == 0.0
        else:
            h = s.head
            assert r == pytest.approx(-rp.delay_weight * e2e_delay(h, a, s.clock, 0.1) / (h.deadline_slot - h.release_slot))


def test_distance_equals_mean_over_distinct_triples(base_decisions):
    # with U uniform over the support and pi the empirical frequency, the IS mean collapses to this
    g, dec = base_decisions
    h = _scaled(g, 0.6, "half")
    va, vb = GraphView(g), GraphView(h)
    seen = {}
    for s, a in dec:
        ra, ka = va.outcome(s, a)
        rb, kb = vb.outcome(s, a)
        seen[(id(s), a.sig, ka)] = abs(ra - rb) + 0.7 * (0.0 if ka == kb else 1.0)
    want = float(np.mean(list(seen.values())))
    assert sfc_distance(dec, g, h, kappa=0.7) == pytest.approx(want, rel=1e-12)
    assert want > 0


def test_samples_are_normalized(base_decisions):
    g, dec = base_decisions
    samples = decision_samples(dec, GraphView(g))
    distinct = {}
    for s, a, k, pi, u in samples:
        distinct[(id(s), a.sig, k)] = (pi, u)
    assert sum(pi for pi, _ in distinct.values()) == pytest.approx(1.0)
    assert sum(u for _, u in distinct.values()) == pytest.approx(1.0)


def test_missing_link_counts_as_reject(base_decisions):
    g, dec = base_decisions
    used = next(a for s, a in dec if a.kind == PLACE and any(len(seg) > 1 for seg in a.routing))
    u, v = next((x, y) for seg in used.routing for x, y in zip(seg, seg[1:]))
    bw = {k: b for k, b in g.bw.items() if k != (min(u, v), max(u, v))}
    h = NetworkGraph(cpu=dict(g.cpu), region=dict(g.region), bw=bw, graph_id="cut")
    s = next(s for s, a in dec if a is used)
    r, _ = GraphView(h).outcome(s, used)
    assert r == RewardParams().blocking_penalty


def test_more_drift_more_distance(base_decisions):
    g, dec = base_decisions
    d = [sfc_distance(dec, g, _scaled(g, f, f"x{f}")) for f in (0.9, 0.6, 0.3)]
    assert d[0] <= d[1] <= d[2] and d[2] > 0


def test_calibration_pairs_are_reproducible(fam):
    a, b = fam.pairs(4, seed=11), fam.pairs(4, seed=11)
    assert [(r.delta_g, d) for r, d in a] == [(r.delta_g, d) for r, d in b]
    assert all(r.delta_g > 0 for r, _ in a)


def test_perturbation_families():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = random_perturbation(rng, "uniform")
        assert p.fraction_affected == 1.0 and p.capacity_scale == p.bandwidth_scale
        assert 0.6 <= p.capacity_scale <= 1.4 and abs(p.capacity_scale - 1) >= 0.1
        random_perturbation(rng, "sparse")
    with pytest.raises(ValueError):
        random_perturbation(rng, "wild")


def test_collect_decisions_only_queued_states(fam):
    g = fam.base()
    dec = collect_decisions(g, fam.workload, [5])
    assert dec and all(s.waiting and a.request_id == s.head.request_id for s, a in dec)


# -- trajectory logs ---------------------------------------------------------------

def test_log_round_trip_and_self_distance(tmp_path, fam):
    g = fam.base()
    wl = WorkloadSpec(base_arrival_rate=0.5, horizon=30)
    n = record_trajectory(g, wl, 2, tmp_path / "a.csv")
    steps = read_trajectory(tmp_path / "a.csv")
    assert len(steps) == n > 0
    assert estimate_from_logs(tmp_path / "a.csv", tmp_path / "a.csv") == 0.0
    record_trajectory(_scaled(g, 0.5, "h"), wl, 2, tmp_path / "b.csv")
    assert estimate_from_logs(tmp_path / "a.csv", tmp_path / "b.csv") > 0.0


def test_empirical_model():
    m = EmpiricalModel([("s", "a", "x", 1.0), ("s", "a", "y", 3.0), ("s", "a", "x", 2.0)])
    assert m.reward_of("s", "a") == 2.0
    assert m.prob("s", "a", "x") == pytest.approx(2 / 3)
    assert m.prob("s", "b", "x") == 0.0 and m.reward_of("t", "a") == 0.0


def test_log_without_keys_rejected(tmp_path):
    (tmp_path / "x.csv").write_text("slot,reward\n0,1.0\n")
    with pytest.raises(ValueError):
        read_trajectory(tmp_path / "x.csv")


# -- toy MDPs ----------------------------------------------------------------------

def test_tabular_validation():
    with pytest.raises(ValueError):
        TabularMdp([[0.5]], [[[0.5]]])
    with pytest.raises(ValueError):
        TabularMdp([[2.0]], [[[1.0]]])
    with pytest.raises(ValueError):
        TabularMdp([[0.5]], [[[1.0]]], gamma=1.0)


def test_bandit_q_values():
    m = two_armed_bandit(0.75, 0.5, gamma=0.5)
    # V = 0.75 / (1 - 0.5)
    assert m.q_values()[0] == pytest.approx([1.5, 1.0])


def test_q_values_solve_bellman():
    m = random_tabular(np.random.default_rng(2), 4, 3, gamma=0.8)
    q = m.q_values()
    assert np.allclose(q, m.R + m.gamma * m.P @ q.max(axis=1), atol=1e-10)


def test_exact_distance_by_enumeration():
    rng = np.random.default_rng(4)
    a, b = random_tabular(rng, 3, 2), random_tabular(rng, 3, 2)
    total = sum(abs(a.R[s, x] - b.R[s, x]) + 0.5 * abs(a.P[s, x, t] - b.P[s, x, t])
                for s in range(3) for x in range(2) for t in range(3))
    assert exact_distance(a, b, kappa=0.5) == pytest.approx(total / 18)
    assert exact_distance(a, a) == 0.0


def test_behavior_samples_unbiased():
    rng = np.random.default_rng(8)
    a = random_tabular(rng, 3, 2)
    b = perturbed(a, rng, 0.5)
    beh = rng.random((3, 2, 3)) + 0.2
    est = estimate_distance(behavior_samples(a, 100_000, rng, beh), a, b)
    d = exact_distance(a, b)
    assert abs(est - d) <= 0.05 * d


def test_uniform_samples_weights():
    m = random_tabular(np.random.default_rng(1), 3, 2)
    for s, a, s2, pi, u in uniform_samples(m, 50, np.random.default_rng(2)):
        assert pi == u == 1 / 18


def test_bernoulli_rewards_keep_mean():
    m = two_armed_bandit()
    rng = np.random.default_rng(0)
    r = np.mean([m.step(0, 1, rng).reward for _ in range(20_000)])
    assert abs(r - 0.25) < 4 * np.sqrt(0.25 * 0.75 / 20_000)
