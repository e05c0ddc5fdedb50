"""Independent reference implementations used as test oracles.

Nothing here imports the code under test beyond plain data types, so a bug
in the package cannot hide behind an identical bug in its oracle.
"""

from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np


# -- paths -----------------------------------------------------------------------


def all_simple_paths(adj: dict, src, dst, cutoff: int) -> list[tuple]:
    """Every loop-free src->dst path with at most ``cutoff`` hops, plain DFS."""
    out = []

    def dfs(path):
        last = path[-1]
        if last == dst:
            out.append(tuple(path))
            return
        if len(path) - 1 == cutoff:
            return
        for v in adj[last]:
            if v not in path:
                dfs(path + [v])

    dfs([src])
    return out


def k_shortest_oracle(g, src, dst, k: int) -> list[tuple]:
    adj = {n: sorted(v for e in g.bw for v in e if n in e and v != n) for n in g.cpu}
    if src == dst:
        return [(src,)][:k]
    for cutoff in range(1, len(g.cpu)):
        paths = all_simple_paths(adj, src, dst, cutoff)
        if len(paths) >= k or cutoff == len(g.cpu) - 1:
            return sorted(paths, key=lambda p: (len(p), p))[:k]
    return []


# -- assignments -----------------------------------------------------------------


def on_path_assignments(path, links, resid_cpu, resid_bw, vnf, seg):
    """All nondecreasing VNF->path-position tuples that fit residual CPU and bandwidth.

    ``path`` holds node ids, ``links`` the sorted endpoint pair of each hop;
    residuals are dicts keyed the same way.
    """
    k = len(vnf)
    out = []
    for pos in itertools.combinations_with_replacement(range(len(path)), k):
        used = {}
        for p, d in zip(pos, vnf):
            used[path[p]] = used.get(path[p], 0) + d
        if any(used[n] > resid_cpu[n] for n in used):
            continue
        ok = True
        for hop, e in enumerate(links):
            crossing = sum(1 for p in pos if p <= hop)  # segment index on this hop
            if seg[crossing] > resid_bw[e]:
                ok = False
                break
        if ok:
            out.append(pos)
    return out


def maxres_assignment(path, resid_cpu, vnf):
    """Greedy max-residual packing, positions never moving back; ties to lower node id."""
    tmp = {n: resid_cpu[n] for n in path}
    prev = 0
    pos = []
    for d in vnf:
        cands = [(p, path[p]) for p in range(prev, len(path)) if tmp[path[p]] >= d]
        if not cands:
            return None
        p, n = min(cands, key=lambda c: (-tmp[c[1]], c[1]))
        tmp[n] -= d
        pos.append(p)
        prev = p
    return tuple(pos)


# -- accounting replay -----------------------------------------------------------


def replay_residuals(g, placements):
    """Residual CPU/bandwidth after subtracting every (request, assignment, routing)."""
    cpu = dict(g.cpu)
    bw = dict(g.bw)
    for req, assignment, routing in placements:
        for n, d in zip(assignment, req.vnf_demands):
            cpu[n] -= d
        segs = (req.flow_demands[0],) + tuple(req.flow_demands) + (req.flow_demands[-1],)
        for path, d in zip(routing, segs):
            for u, v in zip(path, path[1:]):
                bw[(min(u, v), max(u, v))] -= d
    return cpu, bw


def feasible_by_replay(g, active, req, assignment, routing, clock) -> bool:
    """Place-feasibility by recomputing residuals from scratch."""
    if clock + req.duration > req.deadline_slot:
        return False
    cpu, bw = replay_residuals(g, active + [(req, assignment, routing)])
    return min(cpu.values()) >= 0 and min(bw.values(), default=0) >= 0


# -- exhaustive search ------------------------------------------------------------


def exhaustive_q(mdp, state) -> dict:
    """Optimal discounted return of each root action by enumerating every action sequence."""

    def value(s):
        if mdp.is_terminal(s):
            return 0.0
        return max(q(s, a) for a in mdp.enumerate_actions(s))

    def q(s, a):
        out = mdp.step(s, a)
        return out.reward + mdp.gamma * value(out.next_state)

    return {a.sig: q(state, a) for a in mdp.enumerate_actions(state)}


# -- drift -----------------------------------------------------------------------


def _nx(g):
    h = nx.Graph()
    h.add_nodes_from(g.cpu)
    h.add_edges_from(g.bw)
    return h


def drift_oracle(g1, g2, w=(0.25, 0.25, 0.25, 0.25)) -> dict:
    """Graph drift with default normalizers, from networkx spectra and dict diffs."""
    s1 = np.sort(nx.laplacian_spectrum(_nx(g1)))
    s2 = np.sort(nx.laplacian_spectrum(_nx(g2)))
    n = max(len(s1), len(s2))
    s1 = np.pad(s1, (n - len(s1), 0))
    s2 = np.pad(s2, (n - len(s2), 0))
    spec = math.sqrt(sum((a - b) ** 2 for a, b in zip(s1, s2)))
    nodes = set(g1.cpu) | set(g2.cpu)
    links = set(g1.bw) | set(g2.bw)
    cap = sum(abs(g1.cpu.get(x, 0) - g2.cpu.get(x, 0)) for x in nodes)
    bw = sum(abs(g1.bw.get(x, 0) - g2.bw.get(x, 0)) for x in links)
    edit = len(set(g1.cpu) ^ set(g2.cpu)) + len(set(g1.bw) ^ set(g2.bw))
    rho = (
        max((len(g1.cpu) + len(g2.cpu)) / 2, 1),
        max((sum(g1.cpu.values()) + sum(g2.cpu.values())) / 2, 1),
        max((sum(g1.bw.values()) + sum(g2.bw.values())) / 2, 1),
        max((len(g1.cpu) + len(g1.bw) + len(g2.cpu) + len(g2.bw)) / 2, 1),
    )
    raw = (spec, cap, bw, edit)
    dg = sum(wk * r / p for wk, r, p in zip(w, raw, rho))
    return {"spec": spec, "cap": cap, "bw": bw, "edit": edit, "delta_g": dg}


# -- statistics ------------------------------------------------------------------


def nearest_rank(values, p) -> float:
    return float(np.percentile(np.asarray(values, dtype=float), p, method="inverted_cdf"))


def maxmin_oracle(stats, n_parent, c, ucb) -> str:
    """Brute-force arg max over sig of min(UCT score, transfer UCB).

    ``stats`` maps sig -> (N, value_sum); ``ucb`` maps sig -> float (missing = inf).
    Ties: more visits, then the smaller sig.
    """
    scored = []
    for sig, (n, total) in stats.items():
        uct = math.inf if n == 0 else total / n + c * math.sqrt(math.log(max(n_parent, 1)) / n)
        scored.append((min(uct, ucb.get(sig, math.inf)), n, sig))
    best = max(v for v, _, _ in scored)
    tied = [x for x in scored if x[0] == best]
    top_n = max(n for _, n, _ in tied)
    return min(sig for v, n, sig in tied if n == top_n)
