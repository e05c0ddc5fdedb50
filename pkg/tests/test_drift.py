import math

import pytest
from hypothesis import given, strategies as st

from driftsfc.drift import (
    CSV_HEADER, DriftReport, DriftWeights, SurrogateError, bandwidth_delta, calibrate_lipschitz_c,
    capacity_delta, edit_distance, graph_drift, laplacian_spectrum, spectral_distance,
)
from driftsfc.network import NetworkGraph, apply_perturbation, build_base_topology, default_perturbation

from oracles import drift_oracle


def _g(cpu, bw):
    return NetworkGraph(cpu=cpu, region={n: "access" for n in cpu}, bw=bw)


K2 = _g({0: 1, 1: 1}, {(0, 1): 1})
P3 = _g({0: 1, 1: 1, 2: 1}, {(0, 1): 1, (1, 2): 1})


def test_spectra_of_small_paths():
    assert laplacian_spectrum(K2) == pytest.approx([0, 2])
    assert laplacian_spectrum(P3) == pytest.approx([0, 1, 3])


def test_spectral_distance_k2_p3():
    assert spectral_distance(K2, P3) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert spectral_distance(K2, K2) == 0


def test_capacity_delta_single_node():
    a = _g({0: 10, 1: 5}, {(0, 1): 1})
    b = _g({0: 12, 1: 5}, {(0, 1): 1})
    assert capacity_delta(a, b) == 2


def test_bandwidth_delta_missing_link(g0):
    e = g0.links[0]
    bw = dict(g0.bw)
    del bw[e]
    h = NetworkGraph(cpu=g0.cpu, region=g0.region, bw=bw)
    assert bandwidth_delta(g0, h) == g0.bw[e]
    assert edit_distance(g0, h) == 1


def test_edit_distance_added_node():
    a = P3
    b = _g({0: 1, 1: 1, 2: 1, 3: 1}, {(0, 1): 1, (1, 2): 1, (2, 3): 1, (0, 3): 1})
    assert edit_distance(a, b) == 3
    assert edit_distance(a, a) == 0


def test_g0_g2_deltas_match_dict_diff(family):
    g0, g2 = family["G0"], family["G2"]
    ref = drift_oracle(g0, g2)
    assert capacity_delta(g0, g2) == ref["cap"]
    assert bandwidth_delta(g0, g2) == ref["bw"]
    assert edit_distance(g0, g2) == ref["edit"] == 2


def test_identical_graphs_zero(g0):
    r = graph_drift(g0, g0, DriftWeights(lipschitz_c=3.0))
    assert r.delta_g == 0 and r.mdp_distance_bound == 0


def test_single_component_projection(family):
    r = graph_drift(family["G0"], family["G3"], DriftWeights.unit("spec"))
    assert r.delta_g == r.delta_spec


def test_family_ordering_matches_independent_reimplementation(family):
    ours = {k: graph_drift(family["G0"], family[k]).delta_g for k in ("G1", "G2", "G3")}
    ref = {k: drift_oracle(family["G0"], family[k])["delta_g"] for k in ("G1", "G2", "G3")}
    assert sorted(ours, key=ours.get) == sorted(ref, key=ref.get)
    for k in ours:
        assert ours[k] == pytest.approx(ref[k], rel=1e-9)


def test_bound_linear_in_c(family):
    a = graph_drift(family["G0"], family["G1"], DriftWeights(lipschitz_c=1.0))
    b = graph_drift(family["G0"], family["G1"], DriftWeights(lipschitz_c=2.5))
    assert b.mdp_distance_bound == pytest.approx(2.5 * a.mdp_distance_bound, rel=1e-12)


graphs = st.builds(
    lambda n, extra, seed: build_base_topology(n, min(n - 1 + extra, n * (n - 1) // 2), seed),
    st.integers(2, 9), st.integers(0, 6), st.integers(0, 10_000),
)


@given(graphs, st.sampled_from(["upgrade", "degrade", "mixed"]), st.integers(0, 100))
def test_drift_symmetric_nonnegative(g, kind, seed):
    try:
        h = apply_perturbation(g, default_perturbation(kind, seed))
    except ValueError:
        h = g
    a, b = graph_drift(g, h), graph_drift(h, g)
    for f in ("delta_spec", "delta_cap", "delta_bw", "delta_edit", "delta_g"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-9)
        assert getattr(a, f) >= 0
    assert a.delta_g == pytest.approx(drift_oracle(g, h)["delta_g"], abs=1e-9)


@given(graphs, graphs)
def test_drift_matches_oracle_across_sizes(g, h):
    assert graph_drift(g, h).delta_g == pytest.approx(drift_oracle(g, h)["delta_g"], abs=1e-9)


@given(graphs, st.integers(0, 100), st.integers(1, 20), st.booleans())
def test_monotone_in_capacity_and_bandwidth(g, seed, bump, on_link):
    # push one resource of h further from g; fixed normalizers keep the other terms equal
    w = DriftWeights(rho_spec=2.0, rho_cap=30.0, rho_bw=50.0, rho_edit=7.0)
    try:
        h = apply_perturbation(g, default_perturbation("upgrade", seed))
    except ValueError:
        h = g
    cpu, bw = dict(h.cpu), dict(h.bw)
    if on_link:
        e = h.links[seed % h.n_links]
        bw[e] = max(bw[e], g.bw.get(e, 0)) + bump
    else:
        n = h.nodes[seed % h.n_nodes]
        cpu[n] = max(cpu[n], g.cpu[n]) + bump
    h2 = NetworkGraph(cpu=cpu, region=h.region, bw=bw)
    a, b = graph_drift(g, h, w), graph_drift(g, h2, w)
    assert b.delta_spec == pytest.approx(a.delta_spec, abs=1e-9)
    assert b.delta_cap + b.delta_bw > a.delta_cap + a.delta_bw
    assert b.delta_g >= a.delta_g


def test_weights_validation():
    with pytest.raises(ValueError):
        DriftWeights(w_spec=-1)
    with pytest.raises(ValueError):
        DriftWeights(0, 0, 0, 0)
    with pytest.raises(ValueError):
        DriftWeights(rho_cap=0)
    with pytest.raises(ValueError):
        DriftWeights(lipschitz_c=0)


def test_csv_row_shape(family):
    r = graph_drift(family["G0"], family["G1"])
    fields = r.csv_row().split(",")
    assert len(fields) == len(CSV_HEADER.split(",")) == 6
    assert float(fields[4]) == r.delta_g


def test_calibrate_single_ratio():
    assert calibrate_lipschitz_c([(1.0, 0.5)]) == pytest.approx(0.55)


def test_calibrate_max_ratio():
    assert calibrate_lipschitz_c([(1.0, 0.5), (2.0, 0.4)]) == pytest.approx(0.55)


def test_calibrate_accepts_reports():
    rep = DriftReport(0, 0, 0, 0, 2.0, 2.0)
    assert calibrate_lipschitz_c([(rep, 1.0)]) == pytest.approx(0.55)


def test_calibrate_surrogate_failure():
    with pytest.raises(SurrogateError):
        calibrate_lipschitz_c([(0.0, 0.3), (1.0, 0.1)])
    with pytest.raises(ValueError):
        calibrate_lipschitz_c([(0.0, 0.0)])
    with pytest.raises(ValueError):
        calibrate_lipschitz_c([])


@given(st.lists(st.tuples(st.floats(1e-3, 10), st.floats(0, 10)), min_size=1, max_size=30))
def test_calibrated_c_covers_every_sample(samples):
    c = calibrate_lipschitz_c(samples)
    assert all(c * dg >= d for dg, d in samples)
