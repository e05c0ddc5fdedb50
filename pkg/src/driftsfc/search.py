"""UCT Monte-Carlo tree search.

Works on any MDP object exposing ``legal_actions``, ``step(s, a, rng)``,
``is_terminal``, ``state_key``, ``gamma``, ``deterministic`` and either a
fast ``rollout(s, horizon, rng)`` or a ``default_action(s, rng)`` policy.
The lifelong planner subclasses :class:`UctPlanner` and overrides the hooks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

INF = math.inf


@dataclass(frozen=True)
class UctParams:
    """Search knobs. ``exploration_c=None`` means sqrt(2) * r_max / (1 - gamma)."""

    exploration_c: float | None = None
    budget: int = 200
    rollout_horizon: int = 20
    max_depth: int = 30
    delta: float = 0.05
    lookahead: int | None = None

    def __post_init__(self):
        if self.exploration_c is not None and self.exploration_c <= 0:
            raise ValueError("exploration_c must be positive")
        if self.budget < 1 or self.rollout_horizon < 0 or self.max_depth < 1:
            raise ValueError("budget and max_depth must be positive, horizon nonnegative")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    def resolved_c(self, gamma: float, r_max: float) -> float:
        if self.exploration_c is not None:
            return self.exploration_c
        return math.sqrt(2.0) * r_max / (1.0 - gamma)

    def with_budget(self, budget: int) -> UctParams:
        return replace(self, budget=budget)


class EdgeStats:
    """Visit count and value sum of one (state, action) edge.

    ``seed_count`` / ``seed_sum`` record the part injected from prior tasks,
    so the live statistics can be archived separately.
    """

    __slots__ = ("visit_count", "value_sum", "seed_count", "seed_sum")

    def __init__(self, visit_count: int = 0, value_sum: float = 0.0):
        self.visit_count = visit_count
        self.value_sum = value_sum
        self.seed_count = 0
        self.seed_sum = 0.0

    @property
    def q_hat(self) -> float:
        return self.value_sum / self.visit_count if self.visit_count else math.nan

    @property
    def live_count(self) -> int:
        return self.visit_count - self.seed_count

    @property
    def live_q(self) -> float:
        n = self.live_count
        return (self.value_sum - self.seed_sum) / n if n else math.nan

    def add(self, value: float) -> None:
        self.visit_count += 1
        self.value_sum += value

    def seed(self, n: int, q: float) -> None:
        self.visit_count += n
        self.value_sum += q * n
        self.seed_count += n
        self.seed_sum += q * n

    def __repr__(self):
        return f"EdgeStats(N={self.visit_count}, q={self.q_hat:.4g})"


class Edge:
    __slots__ = ("action", "sig", "stats", "child", "reward", "outcomes")

    def __init__(self, action, sig: str):
        self.action = action
        self.sig = sig
        self.stats = EdgeStats()
        self.child: SearchNode | None = None
        self.reward = 0.0
        self.outcomes: dict | None = None


class SearchNode:
    """Tree node. ``children`` maps action_sig to :class:`Edge` once materialized."""

    __slots__ = ("state", "_key", "mdp", "parent", "depth", "children", "order", "n", "eliminated", "terminal")

    def __init__(self, state, mdp, parent: Edge | None = None, depth: int = 0):
        self.state = state
        self.mdp = mdp
        self._key = None
        self.parent = parent
        self.depth = depth
        self.children: dict[str, Edge] | None = None
        self.order: list[str] = []
        self.n = 0
        self.eliminated: set[str] = set()
        self.terminal = mdp.is_terminal(state)

    @property
    def state_key(self):
        if self._key is None:
            self._key = self.mdp.state_key(self.state)
        return self._key

    def materialize(self) -> bool:
        """Create edges for all legal actions; True the first time."""
        if self.children is not None:
            return False
        sig_of = getattr(self.mdp, "action_sig", None)
        edges = {}
        for a in self.mdp.legal_actions(self.state):
            sig = sig_of(a) if sig_of else a.sig
            if sig not in edges:
                edges[sig] = Edge(a, sig)
        if not edges:
            raise ValueError("state has no legal actions")
        self.children = edges
        self.order = sorted(edges)
        return True

    def live_edges(self):
        return [self.children[s] for s in self.order if s not in self.eliminated]

    def count_nodes(self) -> int:
        total = 1
        for e in (self.children or {}).values():
            if e.child is not None:
                total += e.child.count_nodes()
            if e.outcomes:
                total += sum(node.count_nodes() for _, node in e.outcomes.values())
        return total


def uct_score(edge: EdgeStats, parent_n: int, c: float) -> float:
    if edge.visit_count == 0:
        return INF
    return edge.q_hat + c * math.sqrt(math.log(parent_n) / edge.visit_count)


def backpropagate(path: list[tuple[EdgeStats, float]], leaf_value: float, gamma: float = 1.0) -> float:
    """Add r_d + gamma * G_{d+1} to each edge, deepest first; returns the root return."""
    g = leaf_value
    for stats, reward in reversed(path):
        g = reward + gamma * g
        stats.add(g)
    return g


def rollout(state, mdp, policy: Callable | None, horizon: int, rng) -> float:
    """Discounted return of ``policy`` for ``horizon`` slots (steps if the MDP has no clock)."""
    if horizon <= 0:
        return 0.0
    policy = policy or mdp.default_action
    clock = getattr(mdp, "clock", None)
    start = clock(state) if clock else 0
    total, disc, t = 0.0, 1.0, 0
    while not mdp.is_terminal(state):
        elapsed = clock(state) - start if clock else t
        if elapsed >= horizon:
            break
        out = mdp.step(state, policy(state), rng)
        total += disc * out.reward
        disc *= mdp.gamma
        state = out.next_state
        t += 1
    return total


def robust_child(node: SearchNode) -> Edge:
    """Most-visited root edge; ties to higher q_hat, then the smaller sig."""
    best = None
    for sig in node.order:
        e = node.children[sig]
        q = e.stats.q_hat if e.stats.visit_count else -INF
        if best is None or (e.stats.visit_count, q) > (best.stats.visit_count, best_q):
            best, best_q = e, q
    return best


@dataclass
class SearchResult:
    action: object
    sims_used: int
    root: SearchNode


class UctPlanner:
    """Plain UCT: select, expand one child, roll out, back up."""

    name = "umcts"

    def __init__(self, params: UctParams | None = None, r_max: float | None = None):
        self.params = params or UctParams()
        self.r_max = r_max

    # hooks ------------------------------------------------------------

    def exploration(self, mdp) -> float:
        r_max = self.r_max if self.r_max is not None else getattr(getattr(mdp, "reward", None), "r_max", 1.0)
        return self.params.resolved_c(mdp.gamma, r_max)

    def score(self, node: SearchNode, edge: Edge, c: float) -> float:
        return uct_score(edge.stats, max(node.n, 1), c)

    def on_materialize(self, node: SearchNode) -> None:
        pass

    def after_simulation(self, root: SearchNode, path: list) -> bool:
        """Return True to stop the simulation loop early."""
        return False

    # core -------------------------------------------------------------

    def select(self, node: SearchNode, c: float) -> Edge:
        """argmax of the score; ties to more visits, then the smaller sig."""
        custom = type(self).score is not UctPlanner.score
        log_n = math.log(max(node.n, 1))
        best, best_s, best_n = None, -INF, -1
        children, elim = node.children, node.eliminated
        for sig in node.order:
            if sig in elim:
                continue
            edge = children[sig]
            st = edge.stats
            n = st.visit_count
            if custom:
                sc = self.score(node, edge, c)
            elif n == 0:
                sc = INF
            else:
                sc = st.value_sum / n + c * math.sqrt(log_n / n)
            if best is None or sc > best_s or (sc == best_s and n > best_n):
                best, best_s, best_n = edge, sc, n
        if best is None:
            raise RuntimeError("every action at the node was eliminated")
        return best

    def _leaf_value(self, mdp, node: SearchNode, rng) -> float:
        if node.terminal:
            return 0.0
        h = self.params.rollout_horizon
        fast = getattr(mdp, "rollout", None)
        if fast is not None:
            return fast(node.state, h, rng)
        return rollout(node.state, mdp, lambda s: mdp.default_action(s, rng), h, rng)

    def _open(self, node: SearchNode) -> None:
        if node.materialize():
            self.on_materialize(node)

    def simulate(self, mdp, root: SearchNode, c: float, rng) -> list:
        node = root
        path: list[tuple[SearchNode, Edge, float]] = []
        p = self.params
        leaf = None
        while True:
            if node.terminal or node.depth >= p.max_depth:
                leaf = node
                break
            self._open(node)
            edge = self.select(node, c)
            if mdp.deterministic and edge.child is not None:
                path.append((node, edge, edge.reward))
                node = edge.child
                continue
            out = mdp.step(node.state, edge.action, rng)
            path.append((node, edge, out.reward))
            if mdp.deterministic:
                edge.reward = out.reward
                edge.child = SearchNode(out.next_state, mdp, edge, node.depth + 1)
                leaf = edge.child
                break
            if edge.outcomes is None:
                edge.outcomes = {}
            key = mdp.state_key(out.next_state)
            hit = edge.outcomes.get(key)
            if hit is None:
                child = SearchNode(out.next_state, mdp, edge, node.depth + 1)
                edge.outcomes[key] = (out.reward, child)
                leaf = child
                break
            node = hit[1]
        value = self._leaf_value(mdp, leaf, rng)
        leaf.n += 1
        g = value
        for n_, e, r in reversed(path):
            g = r + mdp.gamma * g
            e.stats.add(g)
            n_.n += 1
        return path

    def search(self, root_state, mdp, rng) -> SearchResult:
        view = getattr(mdp, "planning_view", None)
        if view is not None:
            p = self.params
            look = p.lookahead if p.lookahead is not None else p.rollout_horizon + 5
            mdp, root_state = view(root_state, rng, look)
        root = SearchNode(root_state, mdp)
        self._open(root)
        if len(root.children) == 1:
            return SearchResult(root.children[root.order[0]].action, 0, root)
        c = self.exploration(mdp)
        sims = 0
        for _ in range(self.params.budget):
            path = self.simulate(mdp, root, c, rng)
            sims += 1
            if self.after_simulation(root, path):
                break
        return SearchResult(robust_child(root).action, sims, root)

    def plan(self, root_state, mdp, rng) -> tuple[object, int]:
        res = self.search(root_state, mdp, rng)
        return res.action, res.sims_used


def plan(root_state, mdp, params: UctParams, rng) -> tuple[object, int]:
    return UctPlanner(params).plan(root_state, mdp, rng)


def dump_tree(node: SearchNode, max_depth: int = 2, indent: int = 0) -> str:
    """Depth-limited text rendering: one line per visited edge."""
    lines = []
    if node.children is None:
        return ""
    for sig in node.order:
        e = node.children[sig]
        st = e.stats
        if st.visit_count == 0:
            continue
        mark = " x" if sig in node.eliminated else ""
        lines.append(f"{'  ' * indent}{sig} N={st.visit_count} q={st.q_hat:.4f}{mark}")
        if indent + 1 < max_depth:
            kids = [e.child] if e.child is not None else [c for _, c in (e.outcomes or {}).values()]
            for kid in kids:
                sub = dump_tree(kid, max_depth, indent + 1)
                if sub:
                    lines.append(sub)
    return "\n".join(lines)
