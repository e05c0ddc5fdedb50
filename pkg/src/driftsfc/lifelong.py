"""Transfer across drifting tasks: knowledge base, drift-aware bounds, LiSFC search."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .drift import DriftReport, DriftWeights, graph_drift
from .network import NetworkGraph, load_graph, save_graph
from .search import INF, Edge, SearchNode, UctParams, UctPlanner, uct_score

KB_VERSION = 1


@dataclass(frozen=True)
class TransferParams:
    weights: DriftWeights = field(default_factory=DriftWeights)
    kappa: float = 1.0
    delta: float = 0.05
    r_max: float = 1.0
    gamma: float = 0.99
    n_cap: int = 50
    n_min: int = 5
    theta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0 or not 0.0 < self.delta < 1.0:
            raise ValueError("gamma and delta must lie in (0, 1)")
        if self.theta < 0 or self.kappa <= 0 or self.r_max <= 0:
            raise ValueError("theta >= 0, kappa > 0 and r_max > 0 required")
        if self.n_cap < 1 or self.n_min < 1:
            raise ValueError("n_cap and n_min must be positive")

    @property
    def lipschitz_c(self) -> float:
        return self.weights.lipschitz_c

    def with_c(self, c: float) -> TransferParams:
        return replace(self, weights=self.weights.with_c(c))


@dataclass(frozen=True)
class TransferBound:
    source: str
    bias: float
    confidence: float
    u_value: float


def _delta_g(drift: DriftReport | float) -> float:
    return drift.delta_g if isinstance(drift, DriftReport) else float(drift)


def confidence_term(n_i: int, params: TransferParams) -> float:
    return (2.0 * params.r_max / (1.0 - params.gamma)) * math.sqrt(math.log(2.0 / params.delta) / (2.0 * n_i))


def auct_bound(q_i: float, n_i: int, drift: DriftReport | float, params: TransferParams, source: str = "") -> TransferBound:
    """Prior estimate plus drift bias plus Hoeffding width."""
    if n_i < 1:
        raise ValueError("no visits from this task at the edge")
    bias = params.lipschitz_c / (1.0 - params.gamma) * _delta_g(drift)
    conf = confidence_term(n_i, params)
    return TransferBound(source, bias, conf, q_i + bias + conf)


@dataclass
class TaskRecord:
    """Archived edge statistics of one prior task: (state_key, action_sig) -> (q_hat, N)."""

    task_id: str
    graph: NetworkGraph | None = None
    archive: dict = field(default_factory=dict)
    drift_to_current: DriftReport | None = None
    d_hat: float | None = None

    def merge(self, key: tuple[str, str], q: float, n: int, n_cap: int) -> None:
        old = self.archive.get(key)
        if old is None:
            self.archive[key] = (float(q), min(int(n), n_cap))
            return
        q0, n0 = old
        total = n0 + n
        self.archive[key] = ((q0 * n0 + q * n) / total, min(total, n_cap))


class KnowledgeBase:
    """Ordered task records plus a lookup index; read-only while a search runs."""

    def __init__(self, params: TransferParams | None = None, tasks: Iterable[TaskRecord] = ()):
        self.params = params or TransferParams()
        self.tasks: list[TaskRecord] = []
        self.current_graph: NetworkGraph | None = None
        self._index: dict | None = None
        for t in tasks:
            self._add(t)

    def _add(self, rec: TaskRecord) -> TaskRecord:
        if any(t.task_id == rec.task_id for t in self.tasks):
            raise ValueError(f"duplicate task id {rec.task_id!r}")
        self.tasks.append(rec)
        self._index = None
        return rec

    def __len__(self):
        return len(self.tasks)

    def task(self, task_id: str) -> TaskRecord | None:
        return next((t for t in self.tasks if t.task_id == task_id), None)

    def ensure_task(self, task_id: str, graph: NetworkGraph | None = None) -> TaskRecord:
        rec = self.task(task_id)
        if rec is None:
            rec = self._add(TaskRecord(task_id, graph))
        elif graph is not None and rec.graph is None:
            rec.graph = graph
        return rec

    def begin_task(self, graph: NetworkGraph) -> None:
        """Refresh every record's drift to the new current graph."""
        self.current_graph = graph
        for t in self.tasks:
            if t.graph is None:
                raise ValueError(f"task {t.task_id!r} has no graph snapshot")
            t.drift_to_current = graph_drift(t.graph, graph, self.params.weights)
        self._index = None

    def set_drift(self, task_id: str, drift: DriftReport | float) -> None:
        """Override the drift of one record (tests, synthetic MDPs)."""
        rec = self.task(task_id)
        if isinstance(drift, (int, float)):
            drift = DriftReport(0.0, 0.0, 0.0, 0.0, float(drift), self.params.lipschitz_c * float(drift))
        rec.drift_to_current = drift
        self._index = None

    def archive(self, task_id: str, entries: Iterable[tuple[str, str, float, int]], graph: NetworkGraph | None = None) -> int:
        rec = self.ensure_task(task_id, graph)
        n = 0
        for skey, sig, q, count in entries:
            if count >= 1:
                rec.merge((skey, sig), q, count, self.params.n_cap)
                n += 1
        self._index = None
        return n

    # -- lookups -----------------------------------------------------------

    def _build(self) -> dict:
        for t in self.tasks:
            if t.drift_to_current is None:
                raise ValueError(f"drift of task {t.task_id!r} not refreshed")
        index: dict = {}
        for pos, t in enumerate(self.tasks):
            for (skey, sig), (q, n) in t.archive.items():
                index.setdefault(skey, {}).setdefault(sig, []).append((pos, q, n))
        self._index = index
        return index

    def entries(self, skey: str) -> dict:
        index = self._index if self._index is not None else self._build()
        return index.get(skey, {})

    def bounds(self, skey: str, sig: str) -> list[TransferBound]:
        out = []
        for pos, q, n in self.entries(skey).get(sig, ()):
            t = self.tasks[pos]
            out.append(auct_bound(q, n, t.drift_to_current, self.params, t.task_id))
        return out

    def transfer_ucb(self, skey: str, sig: str) -> float:
        bs = self.bounds(skey, sig)
        return min(b.u_value for b in bs) if bs else INF

    def seeds(self, skey: str, sig: str) -> tuple[int, float] | None:
        """Pooled (N, q) from tasks within the injection threshold, N capped."""
        total, acc = 0, 0.0
        for pos, q, n in self.entries(skey).get(sig, ()):
            if _delta_g(self.tasks[pos].drift_to_current) <= self.params.theta:
                total += n
                acc += q * n
        if total == 0:
            return None
        return min(total, self.params.n_cap), acc / total

    # -- persistence -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Header line, one line per task, one line per archived edge (JSON lines)."""
        path = Path(path)
        lines = [json.dumps({"kb_version": KB_VERSION, "params": _params_dict(self.params)})]
        for i, t in enumerate(self.tasks):
            ref = None
            if t.graph is not None:
                ref = f"{path.name}.task{i}.graph.json"
                save_graph(t.graph, path.parent / ref)
            lines.append(json.dumps({"task": t.task_id, "graph": ref, "d_hat": t.d_hat}))
        for t in self.tasks:
            for (skey, sig), (q, n) in sorted(t.archive.items()):
                lines.append(json.dumps({"edge": t.task_id, "s": skey, "a": sig, "q": q, "n": n}))
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> KnowledgeBase:
        path = Path(path)
        rows = [json.loads(x) for x in path.read_text().splitlines() if x.strip()]
        if not rows or rows[0].get("kb_version") != KB_VERSION:
            raise ValueError(f"{path}: not a version-{KB_VERSION} knowledge base")
        kb = cls(_params_from(rows[0]["params"]))
        for r in rows[1:]:
            if "task" in r:
                g = load_graph(path.parent / r["graph"]) if r["graph"] else None
                rec = kb._add(TaskRecord(r["task"], g))
                rec.d_hat = r.get("d_hat")
            elif "edge" in r:
                kb.task(r["edge"]).archive[(r["s"], r["a"])] = (float(r["q"]), int(r["n"]))
        return kb

    def copy(self) -> KnowledgeBase:
        kb = KnowledgeBase(self.params)
        for t in self.tasks:
            kb._add(TaskRecord(t.task_id, t.graph, dict(t.archive), t.drift_to_current, t.d_hat))
        kb.current_graph = self.current_graph
        return kb


def _params_dict(p: TransferParams) -> dict:
    w = p.weights
    return {
        "weights": {k: getattr(w, k) for k in w.__dataclass_fields__},
        "kappa": p.kappa, "delta": p.delta, "r_max": p.r_max, "gamma": p.gamma,
        "n_cap": p.n_cap, "n_min": p.n_min, "theta": p.theta,
    }


def _params_from(d: dict) -> TransferParams:
    d = dict(d)
    return TransferParams(weights=DriftWeights(**d.pop("weights")), **d)


# -- operations on search nodes ---------------------------------------------


def transfer_ucb(s_key: str, a_sig: str, kb: KnowledgeBase) -> float:
    return kb.transfer_ucb(s_key, a_sig)


def _lcb(stats, parent_n: int, c: float) -> float:
    return stats.q_hat - c * math.sqrt(math.log(max(parent_n, 1)) / stats.visit_count)


def maxmin_select(node: SearchNode, kb: KnowledgeBase, c: float, key: str | None = None) -> str:
    """argmax over live actions of min(UCT score, transfer UCB); ties to more visits, then smaller sig."""
    skey = node.state_key if key is None else key
    best, best_v, best_n = None, -INF, -1
    for sig in node.order:
        if sig in node.eliminated:
            continue
        st = node.children[sig].stats
        v = min(uct_score(st, max(node.n, 1), c), kb.transfer_ucb(skey, sig))
        if best is None or v > best_v or (v == best_v and st.visit_count > best_n):
            best, best_v, best_n = sig, v, st.visit_count
    if best is None:
        raise RuntimeError("every action at the node was eliminated")
    return best


def inject_subtrees(kb: KnowledgeBase, root: SearchNode, current_graph: NetworkGraph | None = None, key: str | None = None) -> int:
    """Seed unvisited edges of ``root`` from tasks within the drift threshold."""
    if current_graph is not None and current_graph is not kb.current_graph:
        kb.begin_task(current_graph)
    if root.children is None:
        root.materialize()
    skey = root.state_key if key is None else key
    seeded = 0
    for sig in root.order:
        st = root.children[sig].stats
        if st.live_count > 0:
            continue
        got = kb.seeds(skey, sig)
        if got is None:
            continue
        n, q = got
        st.seed(n, q)
        root.n += n
        seeded += 1
    return seeded


def eliminate_actions(node: SearchNode, kb: KnowledgeBase, c: float, key: str | None = None) -> set[str]:
    """Drop actions whose transfer UCB falls under the best live lower confidence bound."""
    best_sig, best_lcb = _best_lcb(node, c)
    if best_sig is None:
        return node.eliminated
    skey = node.state_key if key is None else key
    for sig in node.order:
        if sig == best_sig or sig in node.eliminated:
            continue
        if kb.transfer_ucb(skey, sig) < best_lcb:
            node.eliminated.add(sig)
    return node.eliminated


def _best_lcb(node: SearchNode, c: float) -> tuple[str | None, float]:
    best_sig, best_lcb = None, -INF
    for sig in node.order:
        if sig in node.eliminated:
            continue
        st = node.children[sig].stats
        if st.visit_count < 1:
            continue
        v = _lcb(st, node.n, c)
        if best_sig is None or v > best_lcb:
            best_sig, best_lcb = sig, v
    return best_sig, best_lcb


# -- MDP distance ------------------------------------------------------------


class CoverageError(ValueError):
    """A sample carries zero behavior probability."""


def estimate_distance(samples: Sequence[tuple], mdp_a, mdp_b, kappa: float = 1.0) -> float:
    """Importance-weighted mean of |R_a - R_b| + kappa * |P_a - P_b| over (s, a, s', pi, U) samples.

    ``mdp_a``/``mdp_b`` must provide ``reward_of(s, a)`` and ``prob(s, a, s2)``.
    """
    if not samples:
        raise ValueError("need at least one sample")
    total = 0.0
    for i, (s, a, s2, pi, u) in enumerate(samples):
        if not pi > 0:
            raise CoverageError(f"sample {i} ({s!r}, {a!r}, {s2!r}) has behavior probability {pi}")
        dr = abs(mdp_a.reward_of(s, a) - mdp_b.reward_of(s, a))
        dp = abs(mdp_a.prob(s, a, s2) - mdp_b.prob(s, a, s2))
        total += (u / pi) * (dr + kappa * dp)
    return total / len(samples)


# -- knowledge base updates ----------------------------------------------------


def tree_entries(roots: Iterable[SearchNode], n_min: int, key_fn: Callable | None = None,
                 sig_fn: Callable | None = None) -> dict:
    """Live edge statistics with at least ``n_min`` live visits, merged across trees.

    ``key_fn(node)`` and ``sig_fn(node, sig)`` translate to knowledge-base keys.
    """
    acc: dict = {}
    for root in roots:
        stack = [root]
        while stack:
            node = stack.pop()
            if node.children is None:
                continue
            skey = None
            for sig, edge in node.children.items():
                st = edge.stats
                n = st.live_count
                if n >= n_min:
                    if skey is None:
                        skey = key_fn(node) if key_fn else node.state_key
                    k = (skey, sig_fn(node, sig) if sig_fn else sig)
                    q = st.live_q
                    old = acc.get(k)
                    if old is None:
                        acc[k] = (q, n)
                    else:
                        q0, n0 = old
                        acc[k] = ((q0 * n0 + q * n) / (n0 + n), n0 + n)
                if edge.child is not None:
                    stack.append(edge.child)
                if edge.outcomes:
                    stack.extend(child for _, child in edge.outcomes.values())
    return acc


def update_kb(kb: KnowledgeBase, finished: SearchNode | Iterable[SearchNode] | dict, graph: NetworkGraph | None,
              task_id: str | None = None) -> KnowledgeBase:
    """Archive well-visited edges into the record for ``task_id`` (default: the graph id)."""
    if isinstance(finished, dict):
        entries = finished
    else:
        roots = [finished] if isinstance(finished, SearchNode) else list(finished)
        entries = tree_entries(roots, kb.params.n_min)
    if not entries:
        return kb
    tid = task_id or (graph.graph_id if graph is not None else f"task{len(kb)}")
    kb.archive(tid, ((s, a, q, n) for (s, a), (q, n) in entries.items()), graph)
    return kb


# -- planner ---------------------------------------------------------------------


class LisfcPlanner(UctPlanner):
    """UCT with max-min transfer selection, subtree injection, elimination and early stop.

    ``key_fn(mdp, state)`` and ``sig_fn(mdp, state, action)`` choose how tree
    edges are matched against the knowledge base; the defaults use the MDP's
    own ``state_key`` and the action's canonical signature.
    """

    name = "lisfc"

    def __init__(self, params: UctParams | None = None, kb: KnowledgeBase | None = None, *,
                 r_max: float | None = None, early_stop: bool = True, eliminate: bool = True,
                 key_fn: Callable | None = None, sig_fn: Callable | None = None):
        super().__init__(params, r_max)
        self.kb = kb if kb is not None else KnowledgeBase()
        self.early_stop = early_stop
        self.eliminate = eliminate
        self.key_fn = key_fn
        self.sig_fn = sig_fn
        self.episode_entries: dict = {}
        self.seeded_edges = 0

    def reset_episode(self) -> None:
        self.episode_entries = {}

    def _key(self, node: SearchNode) -> str:
        if self.key_fn is None:
            return node.state_key
        return self.key_fn(node.mdp, node.state)

    def _sig(self, node: SearchNode, sig: str) -> str:
        if self.sig_fn is None:
            return sig
        return self.sig_fn(node.mdp, node.state, node.children[sig].action)

    def on_materialize(self, node: SearchNode) -> None:
        if not len(self.kb):
            return
        skey = self._key(node)
        pri = {}
        for sig in node.order:
            ksig = self._sig(node, sig)
            u = self.kb.transfer_ucb(skey, ksig)
            if u < INF:
                pri[sig] = u
            got = self.kb.seeds(skey, ksig)
            if got is not None:
                n, q = got
                node.children[sig].stats.seed(n, q)
                node.n += n
                self.seeded_edges += 1
        self._priors[id(node)] = pri

    def select(self, node: SearchNode, c: float) -> Edge:
        pri = self._priors.get(id(node)) if len(self.kb) else None
        if not pri:
            return super().select(node, c)
        log_n = math.log(max(node.n, 1))
        best, best_v, best_n = None, -INF, -1
        for sig in node.order:
            if sig in node.eliminated:
                continue
            edge = node.children[sig]
            st = edge.stats
            n = st.visit_count
            v = INF if n == 0 else st.value_sum / n + c * math.sqrt(log_n / n)
            v = min(v, pri.get(sig, INF))
            if best is None or v > best_v or (v == best_v and n > best_n):
                best, best_v, best_n = edge, v, n
        if best is None:
            raise RuntimeError("every action at the node was eliminated")
        return best

    def _eliminate(self, node: SearchNode, c: float) -> None:
        pri = self._priors.get(id(node))
        if not pri:
            return
        best_sig, best_lcb = _best_lcb(node, c)
        if best_sig is None:
            return
        for sig, u in pri.items():
            if sig != best_sig and u < best_lcb:
                node.eliminated.add(sig)

    def after_simulation(self, root: SearchNode, path: list) -> bool:
        if not len(self.kb):
            return False
        c = self._c
        if self.eliminate:
            for node, _, _ in path:
                self._eliminate(node, c)
        if not self.early_stop:
            return False
        pri = self._priors.get(id(root))
        if not pri:
            return False
        best_sig, best_lcb = _best_lcb(root, c)
        if best_sig is None:
            return False
        for sig in root.order:
            if sig == best_sig or sig in root.eliminated:
                continue
            if not pri.get(sig, INF) < best_lcb:
                return False
        return True

    def search(self, root_state, mdp, rng):
        self._priors: dict = {}
        self._c = self.exploration(mdp)
        res = super().search(root_state, mdp, rng)
        if res.sims_used:
            entries = tree_entries([res.root], self.kb.params.n_min, self._key, self._sig)
            for k, (q, n) in entries.items():
                old = self.episode_entries.get(k)
                if old is None:
                    self.episode_entries[k] = (q, n)
                else:
                    q0, n0 = old
                    self.episode_entries[k] = ((q0 * n0 + q * n) / (n0 + n), n0 + n)
        self._priors = {}
        return res

    def finish_episode(self, graph: NetworkGraph | None, task_id: str | None = None) -> None:
        update_kb(self.kb, self.episode_entries, graph, task_id)
        self.episode_entries = {}
