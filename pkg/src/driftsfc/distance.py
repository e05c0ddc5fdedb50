"""Estimated MDP distance between SFC tasks on two graph snapshots.

Behavior data are NF-Heuristic decisions recorded on graph A. Each recorded
(state, action) is replayed on graph X as a single decision, with no slot
advance, so arrivals and completions drop out:

* R_X(s, a) is the immediate decision reward on X. A placement that does not
  exist or does not fit on X counts as a rejection.
* P_X(s, a, k) is 1 when the post-decision state key on X equals k, else 0.

The reference measure U is uniform over the distinct (s, a, s') triples seen
and the behavior probability is their empirical frequency.
"""

from __future__ import annotations

import csv
import dataclasses
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .baselines import nf_heuristic
from .drift import DriftWeights, graph_drift
from .lifelong import estimate_distance
from .mdp import (
    PLACE, UTIL_LEVELS, WAIT, Action, MdpState, RewardParams, SfcMdp, e2e_delay, slack_bucket,
    trajectory_row, write_trajectory,
)
from .network import NetworkGraph, PerturbationSpec, apply_perturbation, build_base_topology
from .workload import WorkloadSpec, generate_workload

INVALID = "invalid"


def collect_decisions(graph: NetworkGraph, workload: WorkloadSpec, seeds: Iterable[int], *,
                      reward: RewardParams | None = None, k_paths: int = 3) -> list[tuple[MdpState, Action]]:
    """NF-Heuristic head-of-queue decisions from one episode per seed."""
    out = []
    for seed in seeds:
        reqs = generate_workload(graph, workload.with_seed(seed))
        mdp = SfcMdp(graph, reqs, reward=reward, k_paths=k_paths, horizon_end=workload.horizon)
        s = mdp.initial_state()
        while not mdp.is_terminal(s):
            a = nf_heuristic(s, k_paths)
            if s.waiting:
                out.append((s, a))
            s = mdp.step(s, a).next_state
    return out


class GraphView:
    """Replays states recorded on one graph against the resources of another.

    Provides the ``reward_of`` / ``prob`` interface used by estimate_distance.
    """

    def __init__(self, graph: NetworkGraph, reward: RewardParams | None = None, per_hop_delay: float = 0.1):
        self.graph = graph
        self.cg = graph.compiled
        self.reward = reward or RewardParams()
        self.per_hop_delay = per_hop_delay
        self._cache: dict = {}

    def _usage(self, a: Action, req) -> tuple[np.ndarray, np.ndarray] | None:
        cg = self.cg
        cpu = np.zeros(cg.n, dtype=np.int64)
        bw = np.zeros(cg.m, dtype=np.int64)
        try:
            for node, d in zip(a.assignment, req.vnf_demands):
                cpu[cg.index[node]] += d
            for seg, d in zip(a.routing, req.segment_demands):
                for u, v in zip(seg, seg[1:]):
                    bw[cg.link_index[(min(u, v), max(u, v))]] += d
        except KeyError:
            return None
        return cpu, bw

    def outcome(self, s: MdpState, a: Action) -> tuple[float, str]:
        ck = (id(s), a.sig)
        hit = self._cache.get(ck)
        if hit is not None:
            return hit[1:]
        res = self._outcome(s, a)
        # keep s alive so its id is not reused while cached
        self._cache[ck] = (s,) + res
        return res

    def _outcome(self, s: MdpState, a: Action) -> tuple[float, str]:
        rp = self.reward
        cg = self.cg
        used_cpu = np.zeros(cg.n, dtype=np.int64)
        used_bw = np.zeros(cg.m, dtype=np.int64)
        for req, placed in s.act_info:
            u = self._usage(placed, req)
            if u is None:
                return rp.blocking_penalty, INVALID
            used_cpu += u[0]
            used_bw += u[1]
        if (used_cpu > cg.cpu_cap).any() or (used_bw > cg.bw_cap).any():
            return rp.blocking_penalty, INVALID
        env = s.env
        waiting = list(s.waiting)
        if a.kind == WAIT:
            reward = 0.0
        else:
            row = waiting.pop(0)
            req = env.table.requests[row]
            reward = rp.blocking_penalty
            if a.kind == PLACE:
                u = self._usage(a, req)
                if u is not None and (used_cpu + u[0] <= cg.cpu_cap).all() and (used_bw + u[1] <= cg.bw_cap).all():
                    used_cpu += u[0]
                    used_bw += u[1]
                    delay = e2e_delay(req, a, s.clock, self.per_hop_delay)
                    reward = -rp.delay_weight * delay / (req.deadline_slot - req.release_slot)
        return reward, self._key(env, s.clock, waiting, used_cpu, used_bw)

    def _key(self, env: SfcMdp, clock: int, waiting: Sequence[int], used_cpu, used_bw) -> str:
        cg, t = self.cg, env.table
        nodes = kernels.utilization_buckets(used_cpu, cg.cpu_cap, UTIL_LEVELS)
        links = kernels.utilization_buckets(used_bw, cg.bw_cap, UTIL_LEVELS)
        sigs = sorted(
            (int(t.klen[r]), int(t.cpu[r].sum()), int(t.seg[r].sum()), slack_bucket(int(t.dl[r]) - clock - int(t.dur[r])))
            for r in waiting
        )
        # link ids are written out so graphs with different link sets never collide
        lk = ",".join(f"{u}-{v}:{b}" for (u, v), b in zip(cg.link_keys, links.tolist()))
        w = ";".join(".".join(map(str, x)) for x in sigs)
        return "n" + "".join(map(str, nodes.tolist())) + "|l" + lk + "|w" + w

    def reward_of(self, s: MdpState, a: Action) -> float:
        return self.outcome(s, a)[0]

    def prob(self, s: MdpState, a: Action, key: str) -> float:
        return 1.0 if self.outcome(s, a)[1] == key else 0.0


def decision_samples(decisions: Sequence[tuple[MdpState, Action]], view_a: GraphView) -> list[tuple]:
    """(s, a, s', pi, U) tuples; U uniform over distinct triples, pi their empirical frequency."""
    triples = [(s, a, view_a.outcome(s, a)[1]) for s, a in decisions]
    counts = Counter((id(s), a.sig, k) for s, a, k in triples)
    n, support = len(triples), len(counts)
    u = 1.0 / support
    return [(s, a, k, counts[(id(s), a.sig, k)] / n, u) for s, a, k in triples]


def sfc_distance(decisions: Sequence[tuple[MdpState, Action]], graph_a: NetworkGraph, graph_b: NetworkGraph,
                 kappa: float = 1.0, reward: RewardParams | None = None) -> float:
    """d-hat between the SFC tasks on two graphs from decisions recorded on ``graph_a``."""
    va, vb = GraphView(graph_a, reward), GraphView(graph_b, reward)
    return estimate_distance(decision_samples(decisions, va), va, vb, kappa)


# -- calibration family ------------------------------------------------------------------

KINDS = ("upgrade", "degrade", "mixed")
FAMILIES = ("uniform", "sparse")


def random_perturbation(rng: np.random.Generator, family: str = "uniform") -> PerturbationSpec:
    """One member of a calibration family.

    ``uniform`` scales every node and link by a common factor 1 +/- s with
    s ~ U(0.1, 0.4). ``sparse`` rescales a random 20-60% subset with any kind
    and may add or remove one link.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if family == "uniform":
        up = bool(rng.integers(2))
        s = float(rng.uniform(0.1, 0.4))
        scale = 1 + s if up else 1 - s
        return PerturbationSpec("upgrade" if up else "degrade", 1.0, scale, scale, seed=int(rng.integers(2**31)))
    kind = KINDS[int(rng.integers(len(KINDS)))]
    strength = float(rng.uniform(0.1, 0.4))
    frac = float(rng.uniform(0.2, 0.6))
    seed = int(rng.integers(2**31))
    if kind == "upgrade":
        return PerturbationSpec(kind, frac, 1 + strength, 1 + strength, links_added=int(rng.integers(0, 2)), seed=seed)
    if kind == "degrade":
        return PerturbationSpec(kind, frac, 1 - strength, 1 - strength, links_removed=int(rng.integers(0, 2)), seed=seed)
    return PerturbationSpec(kind, frac, 1 + strength, 1 + strength, seed=seed, down_scale=1 - strength)


@dataclasses.dataclass(frozen=True)
class CalibrationFamily:
    """Base graph, behavior workload and pair generator for the surrogate check."""

    n_nodes: int = 5
    n_links: int = 7
    base_seed: int = 3
    workload: WorkloadSpec = WorkloadSpec(base_arrival_rate=0.5, horizon=60, mean_duration=4.0, slack=(1, 4))
    behavior_seeds: tuple[int, ...] = (1, 2, 3)
    kappa: float = 1.0
    weights: DriftWeights = DriftWeights()
    family: str = "uniform"

    def base(self) -> NetworkGraph:
        return build_base_topology(self.n_nodes, self.n_links, self.base_seed, graph_id="B0")

    def decisions(self, g: NetworkGraph | None = None):
        return collect_decisions(g or self.base(), self.workload, self.behavior_seeds)

    def pairs(self, n: int, seed: int) -> list[tuple]:
        """n (DriftReport, d_hat) samples for independently drawn perturbations."""
        g = self.base()
        dec = self.decisions(g)
        rng = np.random.default_rng(seed)
        out = []
        while len(out) < n:
            try:
                g2 = apply_perturbation(g, random_perturbation(rng, self.family)).with_id(f"B{len(out) + 1}")
            except ValueError:
                continue
            if g2.same_resources(g):
                continue
            out.append((graph_drift(g, g2, self.weights), sfc_distance(dec, g, g2, self.kappa)))
        return out


# -- trajectory logs ------------------------------------------------------------------

LOG_EXTRA = ("state_key", "action_sig", "next_key")


def record_trajectory(graph: NetworkGraph, workload: WorkloadSpec, seed: int, path, *,
                      reward: RewardParams | None = None, k_paths: int = 3) -> int:
    """Write one NF-Heuristic episode as a trajectory log; returns the row count."""
    reqs = generate_workload(graph, workload.with_seed(seed))
    mdp = SfcMdp(graph, reqs, reward=reward, k_paths=k_paths, horizon_end=workload.horizon)
    s = mdp.initial_state()
    rows = []
    while not mdp.is_terminal(s):
        a = nf_heuristic(s, k_paths)
        out = mdp.step(s, a)
        row = trajectory_row(s, a, out)
        row.update(state_key=mdp.state_key(s), action_sig=a.sig, next_key=mdp.state_key(out.next_state))
        rows.append(row)
        s = out.next_state
    write_trajectory(rows, path, LOG_EXTRA)
    return len(rows)


def read_trajectory(path) -> list[tuple[str, str, str, float]]:
    """(state_key, action_sig, next_key, reward) per logged step."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not set(LOG_EXTRA) <= set(rows[0]):
        raise ValueError(f"{path}: log lacks columns {', '.join(LOG_EXTRA)}")
    return [(r["state_key"], r["action_sig"], r["next_key"], float(r["reward"])) for r in rows]


class EmpiricalModel:
    """Mean reward and next-key frequencies per (state_key, action_sig) of one log.

    Pairs the log never visited get reward 0 and probability 0.
    """

    def __init__(self, steps: Sequence[tuple[str, str, str, float]]):
        rew: dict = {}
        nxt: dict = {}
        for s, a, s2, r in steps:
            acc = rew.setdefault((s, a), [0.0, 0])
            acc[0] += r
            acc[1] += 1
            c = nxt.setdefault((s, a), Counter())
            c[s2] += 1
        self._r = {k: v[0] / v[1] for k, v in rew.items()}
        self._p = {k: {s2: n / sum(c.values()) for s2, n in c.items()} for k, c in nxt.items()}

    def reward_of(self, s, a) -> float:
        return self._r.get((s, a), 0.0)

    def prob(self, s, a, s2) -> float:
        return self._p.get((s, a), {}).get(s2, 0.0)


def estimate_from_logs(path_a, path_b, kappa: float = 1.0) -> float:
    """d-hat between two logged tasks.

    Samples are the pooled steps of both logs; pi is their pooled empirical
    frequency and U is uniform over the union of distinct triples.
    """
    a, b = read_trajectory(path_a), read_trajectory(path_b)
    pooled = [(s, act, s2) for s, act, s2, _ in a + b]
    if not pooled:
        raise ValueError("both logs are empty")
    counts = Counter(pooled)
    n, u = len(pooled), 1.0 / len(counts)
    samples = [(s, act, s2, counts[(s, act, s2)] / n, u) for s, act, s2 in pooled]
    return estimate_distance(samples, EmpiricalModel(a), EmpiricalModel(b), kappa)
