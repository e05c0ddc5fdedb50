"""Compiled kernels against their own Python source and against the step-by-step MDP."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftsfc import kernels
from driftsfc._accel import USE_NUMBA, py_func
from driftsfc.baselines import nf_heuristic
from driftsfc.mdp import SfcMdp
from driftsfc.search import rollout
from driftsfc.workload import WorkloadSpec, generate_workload, rate_for_unit_load

from oracles import maxres_assignment


def _path_case(data):
    plen = data.draw(st.integers(1, 6))
    n = plen + 2
    path = np.array(data.draw(st.permutations(range(n)))[:plen], dtype=np.int64)
    resid = np.array(data.draw(st.lists(st.integers(0, 8), min_size=n, max_size=n)), dtype=np.int64)
    k = data.draw(st.integers(3, 5))
    dem = np.zeros(5, dtype=np.int64)
    dem[:k] = data.draw(st.lists(st.integers(1, 4), min_size=k, max_size=k))
    return path, plen, resid, dem, k


@given(st.data())
def test_assign_maxres_matches_python_and_oracle(data):
    path, plen, resid, dem, k = _path_case(data)
    ids = np.arange(len(resid), dtype=np.int64)
    skip = data.draw(st.integers(0, 2))
    a, b = np.zeros(5, dtype=np.int64), np.zeros(5, dtype=np.int64)
    ok_a = kernels.assign_maxres(path, plen, resid, dem, k, ids, skip, a)
    ok_b = py_func(kernels.assign_maxres)(path, plen, resid, dem, k, ids, skip, b)
    assert ok_a == ok_b
    if ok_a:
        assert a[:k].tolist() == b[:k].tolist()
    if skip == 0:
        want = maxres_assignment([int(x) for x in path], {i: int(r) for i, r in enumerate(resid)}, dem[:k].tolist())
        assert ok_a == (want is not None)
        if want is not None:
            assert tuple(a[:k].tolist()) == want


@given(st.data())
def test_assign_earliest_matches_python(data):
    path, plen, resid, dem, k = _path_case(data)
    first = data.draw(st.integers(0, plen - 1))
    a, b = np.zeros(5, dtype=np.int64), np.zeros(5, dtype=np.int64)
    ok_a = kernels.assign_earliest(path, plen, resid, dem, k, first, a)
    ok_b = py_func(kernels.assign_earliest)(path, plen, resid, dem, k, first, b)
    assert ok_a == ok_b and (not ok_a or a[:k].tolist() == b[:k].tolist())
    if ok_a:
        assert a[0] >= first and all(x <= y for x, y in zip(a[:k], a[1:k]))


@given(st.data())
def test_fill_monotone_matches_python(data):
    path, plen, resid, dem, k = _path_case(data)
    links = np.arange(max(plen - 1, 1), dtype=np.int64)
    rb = np.array(data.draw(st.lists(st.integers(0, 4), min_size=len(links), max_size=len(links))), dtype=np.int64)
    seg = np.zeros(6, dtype=np.int64)
    seg[: k + 1] = data.draw(st.lists(st.integers(1, 3), min_size=k + 1, max_size=k + 1))
    a, b = np.zeros((16, 5), dtype=np.int64), np.zeros((16, 5), dtype=np.int64)
    na = kernels.fill_monotone(path, links, plen, resid, rb, dem, seg, k, 16, a)
    nb = py_func(kernels.fill_monotone)(path, links, plen, resid, rb, dem, seg, k, 16, b)
    assert na == nb and np.array_equal(a[:na], b[:nb])
    rows = [tuple(r[:k]) for r in a[:na]]
    assert rows == sorted(rows) and len(set(rows)) == len(rows)


@given(st.lists(st.integers(0, 40), min_size=1, max_size=10), st.data())
def test_utilization_buckets(used, data):
    cap = np.array(data.draw(st.lists(st.integers(1, 40), min_size=len(used), max_size=len(used))), dtype=np.int64)
    used = np.minimum(np.array(used, dtype=np.int64), cap)
    got = kernels.utilization_buckets(used, cap, 8)
    assert got.tolist() == [min(8 * u // c, 7) for u, c in zip(used.tolist(), cap.tolist())]
    assert np.array_equal(got, py_func(kernels.utilization_buckets)(used, cap, 8))


def _episode(g, seed, load=1.3, horizon=30):
    spec = WorkloadSpec(base_arrival_rate=rate_for_unit_load(g), load_factor=load, horizon=horizon, seed=seed)
    return SfcMdp(g, generate_workload(g, spec), horizon_end=horizon + 8)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("h", [0, 1, 7, 25, 60])
def test_rollout_kernel_equals_python_rollout(g0, seed, h):
    mdp = _episode(g0, seed)
    s = mdp.initial_state()
    for _ in range(seed * 3):  # start from a few different mid-episode states
        s = mdp.step(s, nf_heuristic(s)).next_state
    fast = mdp.rollout(s, h)
    slow = rollout(s, mdp, nf_heuristic, h, None)
    assert fast == pytest.approx(slow, abs=1e-9)
    args = mdp.kernel_args(s)
    rp = mdp.reward
    pure = py_func(kernels.rollout_kernel)(
        s.clock, mdp.horizon_end, h, *args,
        rp.gamma, rp.completion_reward, rp.blocking_penalty, rp.delay_weight, mdp.per_hop_delay,
    )
    assert pure == pytest.approx(fast, abs=1e-9)


def test_numba_flag_reported():
    # both settings are valid; the benchmark compares them
    assert USE_NUMBA in (True, False)
