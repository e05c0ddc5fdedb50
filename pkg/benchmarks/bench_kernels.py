"""Numba kernels vs the plain numpy/Python fallback.

Part 1 times the rollout kernel and the NF placement kernel directly, the
compiled version against ``py_func`` in one process. Part 2 runs a short
UCT episode twice in subprocesses, once with DRIFTSFC_NO_NUMBA=1.

    python3 benchmarks/bench_kernels.py [--reps 200]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from driftsfc import kernels
from driftsfc._accel import USE_NUMBA, py_func
from driftsfc.baselines import nf_heuristic
from driftsfc.mdp import SfcMdp
from driftsfc.network import graph_family
from driftsfc.workload import WorkloadSpec, generate_workload, rate_for_unit_load

EPISODE = """
import time
from driftsfc.harness import run_episode
from driftsfc.network import graph_family
from driftsfc.search import UctParams, UctPlanner
from driftsfc.workload import WorkloadSpec, rate_for_unit_load
from driftsfc._accel import USE_NUMBA
g = graph_family()["G0"]
wl = WorkloadSpec(base_arrival_rate=rate_for_unit_load(g), load_factor=1.2, horizon=20)
run_episode(g, WorkloadSpec(load_factor=0.0, horizon=2), UctPlanner())  # warm-up / compile
t = time.perf_counter()
rec = run_episode(g, wl, UctPlanner(UctParams(budget=50, rollout_horizon=30)), seed=1)
print(USE_NUMBA, time.perf_counter() - t, rec.blocked, rec.accepted)
"""


def mid_episode_state(seed=0):
    g = graph_family()["G0"]
    spec = WorkloadSpec(base_arrival_rate=rate_for_unit_load(g), load_factor=1.2, horizon=60, seed=seed)
    mdp = SfcMdp(g, generate_workload(g, spec), horizon_end=80)
    s = mdp.initial_state()
    for _ in range(40):
        s = mdp.step(s, nf_heuristic(s)).next_state
    return mdp, s


def timeit(fn, reps):
    fn()
    t = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t) / reps


def bench_rollout(reps):
    mdp, s = mid_episode_state()
    rp = mdp.reward
    args = (s.clock, mdp.horizon_end, 30, *mdp.kernel_args(s),
            rp.gamma, rp.completion_reward, rp.blocking_penalty, rp.delay_weight, mdp.per_hop_delay)
    fast = timeit(lambda: kernels.rollout_kernel(*args), reps)
    slow = timeit(lambda: py_func(kernels.rollout_kernel)(*args), max(reps // 20, 3))
    assert kernels.rollout_kernel(*args) == py_func(kernels.rollout_kernel)(*args)
    return fast, slow


def bench_nf(reps):
    mdp, s = mid_episode_state(1)
    states = []
    while len(states) < 50 and not mdp.is_terminal(s):
        if s.waiting:
            states.append(s)
        s = mdp.step(s, nf_heuristic(s)).next_state

    def run():
        for x in states:
            nf_heuristic(x)
    return timeit(run, reps) / len(states)


def episode(no_numba):
    env = dict(os.environ)
    env.pop("DRIFTSFC_NO_NUMBA", None)
    if no_numba:
        env["DRIFTSFC_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", EPISODE], env=env, capture_output=True, text=True, check=True)
    flag, secs, blocked, accepted = out.stdout.split()
    return flag == "True", float(secs), (int(blocked), int(accepted))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--skip-episode", action="store_true")
    a = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled in this process; part 1 compares Python with itself")
    fast, slow = bench_rollout(a.reps)
    print(f"rollout_kernel h=30   numba {fast * 1e6:9.1f} us   python {slow * 1e6:9.1f} us   x{slow / fast:.0f}")
    print(f"nf_heuristic / call   {bench_nf(a.reps) * 1e6:9.1f} us ({'numba' if USE_NUMBA else 'python'})")
    if a.skip_episode:
        return
    _, t_fast, res_fast = episode(False)
    _, t_slow, res_slow = episode(True)
    print(f"UCT episode S=50      numba {t_fast:7.2f} s     python {t_slow:7.2f} s     x{t_slow / t_fast:.1f}")
    print("same outcome:", res_fast == res_slow)


if __name__ == "__main__":
    main()
