"""Computing-power-network topologies: generation, perturbation, paths, files."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

ACCESS = "access"
CORE = "core"

ACCESS_CPU = (8, 16)
CORE_CPU = (24, 48)
LINK_BW = (10, 30)
CORE_FRACTION = 0.3


class TopologyError(ValueError):
    """Raised when a requested topology cannot be built."""


def _link(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Undirected CPN snapshot with per-node CPU and per-link bandwidth.

    Node ids are plain ints and are stable across perturbed snapshots. Links
    are keyed by the sorted endpoint pair.
    """

    cpu: Mapping[int, int]
    region: Mapping[int, str]
    bw: Mapping[tuple[int, int], int]
    graph_id: str = "G"

    def __post_init__(self):
        cpu = {int(n): int(c) for n, c in self.cpu.items()}
        region = {int(n): str(r) for n, r in self.region.items()}
        bw: dict[tuple[int, int], int] = {}
        for (u, v), b in self.bw.items():
            u, v = int(u), int(v)
            if u == v:
                raise TopologyError(f"self-loop on node {u}")
            key = _link(u, v)
            if key in bw:
                raise TopologyError(f"duplicate link {key}")
            if u not in cpu or v not in cpu:
                raise TopologyError(f"link {key} references an unknown node")
            bw[key] = int(b)
        if set(region) != set(cpu):
            raise TopologyError("region and cpu must cover the same nodes")
        if any(r not in (ACCESS, CORE) for r in region.values()):
            raise TopologyError("region must be 'access' or 'core'")
        if any(c < 0 for c in cpu.values()) or any(b < 0 for b in bw.values()):
            raise TopologyError("capacities and bandwidths must be nonnegative")
        object.__setattr__(self, "cpu", dict(sorted(cpu.items())))
        object.__setattr__(self, "region", dict(sorted(region.items())))
        object.__setattr__(self, "bw", dict(sorted(bw.items())))

    def __eq__(self, other):
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return (
            self.graph_id == other.graph_id
            and self.cpu == other.cpu
            and self.region == other.region
            and self.bw == other.bw
        )

    __hash__ = None  # mutable-looking mappings; compare with ==

    def same_resources(self, other: NetworkGraph) -> bool:
        return self.cpu == other.cpu and self.region == other.region and self.bw == other.bw

    def with_id(self, graph_id: str) -> NetworkGraph:
        return replace(self, graph_id=graph_id)

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(self.cpu)

    @property
    def links(self) -> tuple[tuple[int, int], ...]:
        return tuple(self.bw)

    @property
    def n_nodes(self) -> int:
        return len(self.cpu)

    @property
    def n_links(self) -> int:
        return len(self.bw)

    @property
    def total_cpu(self) -> int:
        return sum(self.cpu.values())

    @property
    def total_bw(self) -> int:
        return sum(self.bw.values())

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {n: [] for n in self.cpu}
        for u, v in self.bw:
            adj[u].append(v)
            adj[v].append(u)
        return {n: tuple(sorted(vs)) for n, vs in adj.items()}

    @property
    def access_nodes(self) -> tuple[int, ...]:
        return tuple(n for n, r in self.region.items() if r == ACCESS)

    def is_connected(self) -> bool:
        return _connected(self.cpu.keys(), self.bw.keys())

    def hop_distances(self, dst: int) -> dict[int, int]:
        """BFS hop counts from every reachable node to ``dst``."""
        return _bfs(self.adjacency, dst)

    @cached_property
    def _path_cache(self) -> dict:
        return {}

    @cached_property
    def compiled(self) -> CompiledGraph:
        return CompiledGraph.from_graph(self)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "nodes": [
                {"id": n, "region": self.region[n], "cpu": c} for n, c in self.cpu.items()
            ],
            "links": [{"u": u, "v": v, "bw": b} for (u, v), b in self.bw.items()],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> NetworkGraph:
        nodes = data["nodes"]
        return cls(
            cpu={int(n["id"]): int(n["cpu"]) for n in nodes},
            region={int(n["id"]): n["region"] for n in nodes},
            bw={(int(e["u"]), int(e["v"])): int(e["bw"]) for e in data["links"]},
            graph_id=str(data.get("graph_id", "G")),
        )


def _bfs(adj: Mapping[int, tuple[int, ...]], dst: int, blocked: int | None = None) -> dict:
    dist = {dst: 0}
    queue = deque([dst])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist and v != blocked:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _connected(nodes: Iterable[int], links: Iterable[tuple[int, int]]) -> bool:
    nodes = list(nodes)
    if not nodes:
        return True
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for u, v in links:
        adj[u].append(v)
        adj[v].append(u)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(nodes)


def save_graph(g: NetworkGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_dict(), indent=1) + "\n")


def load_graph(path: str | Path) -> NetworkGraph:
    return NetworkGraph.from_dict(json.loads(Path(path).read_text()))


# generation ------------------------------------------------------------------


def build_base_topology(
    n_nodes: int,
    n_links: int,
    seed: int,
    *,
    core_fraction: float = CORE_FRACTION,
    access_cpu: tuple[int, int] = ACCESS_CPU,
    core_cpu: tuple[int, int] = CORE_CPU,
    link_bw: tuple[int, int] = LINK_BW,
    graph_id: str = "G0",
) -> NetworkGraph:
    """Random connected CPN: random spanning tree plus uniformly drawn extra links.

    The ``round(core_fraction * n)`` highest-degree nodes (ties to lower id)
    form the core region; the rest are access nodes.
    """
    if n_nodes < 1:
        raise TopologyError("need at least one node")
    max_links = n_nodes * (n_nodes - 1) // 2
    if not (n_nodes - 1 <= n_links <= max_links):
        raise TopologyError(
            f"n_links={n_links} outside [{n_nodes - 1}, {max_links}] for {n_nodes} nodes"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_nodes)
    links: set[tuple[int, int]] = set()
    for i in range(1, n_nodes):
        parent = order[rng.integers(0, i)]
        links.add(_link(int(order[i]), int(parent)))
    free = [
        (u, v) for u in range(n_nodes) for v in range(u + 1, n_nodes) if (u, v) not in links
    ]
    extra = n_links - len(links)
    if extra:
        for i in sorted(rng.choice(len(free), size=extra, replace=False)):
            links.add(free[i])
    if not _connected(range(n_nodes), links):  # pragma: no cover - guaranteed by the tree
        raise TopologyError("generated graph is disconnected")

    degree = {n: 0 for n in range(n_nodes)}
    for u, v in links:
        degree[u] += 1
        degree[v] += 1
    n_core = int(math.floor(core_fraction * n_nodes + 0.5))
    core = set(sorted(degree, key=lambda n: (-degree[n], n))[:n_core])
    region = {n: CORE if n in core else ACCESS for n in range(n_nodes)}
    cpu = {}
    for n in range(n_nodes):
        lo, hi = core_cpu if n in core else access_cpu
        cpu[n] = int(rng.integers(lo, hi + 1))
    bw = {e: int(rng.integers(link_bw[0], link_bw[1] + 1)) for e in sorted(links)}
    return NetworkGraph(cpu=cpu, region=region, bw=bw, graph_id=graph_id)


@dataclass(frozen=True)
class PerturbationSpec:
    """How to derive a drifted snapshot from a base graph.

    ``mixed`` applies a scale-up with ``capacity_scale``/``bandwidth_scale`` and
    an independent scale-down by ``down_scale``, each on its own random
    ``fraction_affected`` selection.
    """

    kind: str
    fraction_affected: float = 0.3
    capacity_scale: float = 1.0
    bandwidth_scale: float = 1.0
    links_added: int = 0
    links_removed: int = 0
    seed: int = 0
    down_scale: float = 0.8
    link_bw: tuple[int, int] = LINK_BW

    def __post_init__(self):
        if self.kind not in ("upgrade", "degrade", "mixed"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if not 0.0 <= self.fraction_affected <= 1.0:
            raise ValueError("fraction_affected must lie in [0, 1]")
        if min(self.capacity_scale, self.bandwidth_scale, self.down_scale) <= 0:
            raise ValueError("scales must be positive")
        if self.links_added < 0 or self.links_removed < 0:
            raise ValueError("link counts must be nonnegative")


def default_perturbation(kind: str, seed: int = 7) -> PerturbationSpec:
    if kind == "upgrade":
        return PerturbationSpec("upgrade", 0.3, 1.2, 1.2, links_added=2, seed=seed)
    if kind == "degrade":
        return PerturbationSpec("degrade", 0.3, 0.8, 0.8, links_removed=2, seed=seed)
    if kind == "mixed":
        return PerturbationSpec(
            "mixed", 0.2, 1.2, 1.2, links_added=2, links_removed=2, seed=seed, down_scale=0.8
        )
    raise ValueError(f"unknown perturbation kind {kind!r}")


def _scaled(value: int, scale: float) -> int:
    return max(1, int(math.floor(value * scale + 0.5)))


def _pick(rng: np.random.Generator, items: list, fraction: float) -> list:
    count = int(math.floor(fraction * len(items) + 1e-9))
    if count == 0:
        return []
    idx = rng.choice(len(items), size=count, replace=False)
    return [items[i] for i in sorted(idx)]


def apply_perturbation(g: NetworkGraph, spec: PerturbationSpec) -> NetworkGraph:
    """Rescale a random subset of nodes/links and add/remove links, keeping ids.

    Removed links are drawn in random order, skipping any whose removal would
    disconnect the graph.
    """
    if not g.is_connected():
        raise TopologyError("perturbation requires a connected graph")
    rng = np.random.default_rng(spec.seed)
    cpu = dict(g.cpu)
    bw = dict(g.bw)
    nodes = list(g.nodes)
    links = list(g.links)

    passes = [(spec.capacity_scale, spec.bandwidth_scale)]
    if spec.kind == "mixed":
        passes.append((spec.down_scale, spec.down_scale))
    for cap_scale, bw_scale in passes:
        for n in _pick(rng, nodes, spec.fraction_affected):
            cpu[n] = _scaled(cpu[n], cap_scale)
        for e in _pick(rng, links, spec.fraction_affected):
            bw[e] = _scaled(bw[e], bw_scale)

    removed: set[tuple[int, int]] = set()
    if spec.links_removed:
        for i in rng.permutation(len(links)):
            if len(removed) == spec.links_removed:
                break
            e = links[int(i)]
            trial = [x for x in bw if x != e and x not in removed]
            if _connected(nodes, trial):
                removed.add(e)
        if len(removed) < spec.links_removed:
            raise TopologyError(
                f"cannot remove {spec.links_removed} links without disconnecting {g.graph_id}"
            )
        for e in removed:
            del bw[e]

    if spec.links_added:
        free = [
            (u, v)
            for i, u in enumerate(nodes)
            for v in nodes[i + 1 :]
            if (u, v) not in bw and (u, v) not in removed
        ]
        if len(free) < spec.links_added:
            raise TopologyError("not enough unlinked node pairs to add links")
        lo, hi = spec.link_bw
        for i in sorted(rng.choice(len(free), size=spec.links_added, replace=False)):
            bw[free[i]] = int(rng.integers(lo, hi + 1))

    out = NetworkGraph(cpu=cpu, region=dict(g.region), bw=bw, graph_id=g.graph_id)
    if not out.is_connected():  # pragma: no cover - removal keeps connectivity
        raise TopologyError("perturbed graph is disconnected")
    return out


def graph_family(
    n_nodes: int = 20, n_links: int = 40, base_seed: int = 1, perturb_seed: int = 7
) -> dict[str, NetworkGraph]:
    """The base topology G0 and its upgrade/degrade/mixed variants G1..G3."""
    g0 = build_base_topology(n_nodes, n_links, base_seed, graph_id="G0")
    return {
        "G0": g0,
        "G1": apply_perturbation(g0, default_perturbation("upgrade", perturb_seed)).with_id("G1"),
        "G2": apply_perturbation(g0, default_perturbation("degrade", perturb_seed)).with_id("G2"),
        "G3": apply_perturbation(g0, default_perturbation("mixed", perturb_seed)).with_id("G3"),
    }


# paths -----------------------------------------------------------------------


def k_shortest_paths(g: NetworkGraph, src: int, dst: int, k: int) -> list[tuple[int, ...]]:
    """Up to ``k`` loop-free paths ordered by (hop count, node sequence).

    Iterative deepening on the hop count; each round is a depth-first walk over
    ascending neighbor ids, pruned by BFS distance to ``dst``, so paths of one
    length come out in lexicographic order.
    """
    if src not in g.cpu or dst not in g.cpu:
        raise KeyError(f"unknown node in ({src}, {dst})")
    cache_key = (src, dst, k)
    cached = g._path_cache.get(cache_key)
    if cached is not None:
        return list(cached)
    out: list[tuple[int, ...]] = []
    if k > 0 and src == dst:
        out.append((src,))
    elif k > 0 and src in g.hop_distances(dst):
        adj = g.adjacency
        # distances in the graph without src: a valid bound once the walk has left src
        dist = _bfs(adj, dst, blocked=src)
        dist[src] = g.hop_distances(dst)[src]
        hops = dist[src]
        while len(out) < k and hops < g.n_nodes:
            if not _walk(adj, dist, [src], {src}, dst, hops, k, out):
                break  # nothing was cut by the hop limit: every path is found
            hops += 1
    g._path_cache[cache_key] = tuple(out)
    return list(out)


def _walk(adj, dist, path, seen, dst, hops, k, out) -> bool:
    """Append length-``hops`` paths; return True if the hop limit cut any branch."""
    last = path[-1]
    remaining = hops - (len(path) - 1)
    if last == dst:
        if remaining == 0:
            out.append(tuple(path))
        return False
    if remaining == 0:
        return True
    cut = False
    for v in adj[last]:
        if len(out) >= k:
            return True
        if v in seen or v not in dist:
            continue
        if dist[v] > remaining - 1:
            cut = True
            continue
        path.append(v)
        seen.add(v)
        cut |= _walk(adj, dist, path, seen, dst, hops, k, out)
        path.pop()
        seen.discard(v)
    return cut


@dataclass(frozen=True, eq=False)
class PathTable:
    """Padded k-shortest-path arrays for every ordered node pair.

    Row ``src_idx * n + dst_idx``. ``nodes`` holds node indices padded with -1,
    ``links`` the link index of each hop, ``length`` the node count (0 = absent).
    """

    k: int
    nodes: np.ndarray
    links: np.ndarray
    length: np.ndarray


@dataclass(frozen=True, eq=False)
class CompiledGraph:
    """Index-based array view of a graph for the numeric kernels."""

    node_ids: np.ndarray
    index: dict[int, int]
    cpu_cap: np.ndarray
    link_keys: tuple[tuple[int, int], ...]
    link_index: dict[tuple[int, int], int]
    bw_cap: np.ndarray
    graph: NetworkGraph = field(repr=False)
    _tables: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_graph(cls, g: NetworkGraph) -> CompiledGraph:
        node_ids = np.array(g.nodes, dtype=np.int64)
        keys = g.links
        return cls(
            node_ids=node_ids,
            index={n: i for i, n in enumerate(g.nodes)},
            cpu_cap=np.array([g.cpu[n] for n in g.nodes], dtype=np.int64),
            link_keys=keys,
            link_index={e: i for i, e in enumerate(keys)},
            bw_cap=np.array([g.bw[e] for e in keys], dtype=np.int64),
            graph=g,
        )

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def m(self) -> int:
        return len(self.link_keys)

    def path_links(self, path: tuple[int, ...]) -> list[int]:
        return [self.link_index[_link(a, b)] for a, b in zip(path, path[1:])]

    def path_table(self, k: int) -> PathTable:
        table = self._tables.get(k)
        if table is not None:
            return table
        n = self.n
        all_paths = {}
        longest = 1
        for i, s in enumerate(self.graph.nodes):
            for j, d in enumerate(self.graph.nodes):
                if i == j:
                    continue
                ps = k_shortest_paths(self.graph, s, d, k)
                all_paths[i * n + j] = ps
                for p in ps:
                    longest = max(longest, len(p))
        nodes = np.full((n * n, k, longest), -1, dtype=np.int64)
        links = np.full((n * n, k, max(longest - 1, 1)), -1, dtype=np.int64)
        length = np.zeros((n * n, k), dtype=np.int64)
        for row, ps in all_paths.items():
            for r, p in enumerate(ps):
                length[row, r] = len(p)
                for h, node in enumerate(p):
                    nodes[row, r, h] = self.index[node]
                for h, li in enumerate(self.path_links(p)):
                    links[row, r, h] = li
        table = PathTable(k=k, nodes=nodes, links=links, length=length)
        self._tables[k] = table
        return table
