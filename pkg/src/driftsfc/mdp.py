"""SFC placement MDP: state, actions, transitions and reward.

A decision is always about the head of the waiting queue. Place and Reject
resolve the head immediately; the clock moves one slot forward after a Wait or
as soon as the queue is empty. A slot advance releases finished chains, admits
new arrivals and auto-blocks waiting requests that can no longer meet their
deadline.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .network import NetworkGraph, _link
from .workload import MAX_CHAIN, SfcRequest, WorkloadSpec, endpoints_for, sample_request_arrays

REJECT, WAIT, PLACE = "reject", "wait", "place"
UTIL_LEVELS = 8


@dataclass(frozen=True)
class RewardParams:
    completion_reward: float = 1.0
    blocking_penalty: float = -1.0
    delay_weight: float = 0.1
    gamma: float = 0.99
    r_max: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.delay_weight < 0:
            raise ValueError("delay_weight must be nonnegative")
        cap = max(abs(self.completion_reward), abs(self.blocking_penalty))
        if self.r_max < cap:
            raise ValueError(f"r_max={self.r_max} below per-event reward {cap}")


@dataclass(frozen=True)
class Action:
    """Reject, Wait or Place for the head request.

    ``routing`` holds the k+1 node paths ingress -> VNF1 -> ... -> VNFk -> egress.
    ``sig`` is the canonical string used to match actions across tasks.
    """

    kind: str
    request_id: int | None = None
    assignment: tuple[int, ...] = ()
    routing: tuple[tuple[int, ...], ...] = ()
    start_slot: int = -1
    cpu_use: np.ndarray | None = field(default=None, compare=False, repr=False)
    bw_use: np.ndarray | None = field(default=None, compare=False, repr=False)
    tag: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in (REJECT, WAIT, PLACE):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind == PLACE:
            if not self.assignment or len(self.routing) != len(self.assignment) + 1:
                raise ValueError("Place needs one node per VNF and k+1 routed segments")
            for i, seg in enumerate(self.routing):
                if not seg:
                    raise ValueError("empty routing segment")
                if i < len(self.assignment) and seg[-1] != self.assignment[i]:
                    raise ValueError("segment does not end at its VNF node")
                if i > 0 and seg[0] != self.assignment[i - 1]:
                    raise ValueError("segment does not start at the previous VNF node")

    @classmethod
    def _trusted(cls, kind, request_id, assignment, routing, start_slot, cpu_use, bw_use, tag="") -> Action:
        """Skip validation for candidates built from path tables."""
        a = object.__new__(cls)
        d = a.__dict__
        d["kind"], d["request_id"], d["assignment"], d["routing"] = kind, request_id, assignment, routing
        d["start_slot"], d["cpu_use"], d["bw_use"], d["tag"] = start_slot, cpu_use, bw_use, tag
        return a

    @property
    def sig(self) -> str:
        if self.kind == REJECT:
            return "R"
        if self.kind == WAIT:
            return "W"
        nodes = ".".join(map(str, self.assignment))
        route = "/".join("-".join(map(str, seg)) for seg in self.routing)
        return f"P:{nodes}:{route}"

    @property
    def hops(self) -> int:
        return sum(len(seg) - 1 for seg in self.routing)

    def __hash__(self):
        return hash((self.kind, self.request_id, self.assignment, self.routing, self.start_slot))


def e2e_delay(request: SfcRequest, placement: Action, start_slot: int, per_hop_delay: float = 0.1) -> float:
    """Queueing wait plus service time plus hop-count propagation delay."""
    return (start_slot - request.release_slot) + request.duration + placement.hops * per_hop_delay


class RequestTable:
    """Columnar request stream in release order, shared with the kernels.

    Rows sampled by a planner exist only as arrays; ``request(row)`` builds the
    matching :class:`SfcRequest` on first use.
    """

    def __init__(self, ids, rel, dur, dl, klen, ing, egr, cpu, seg, node_ids, objects=None):
        self.ids, self.rel, self.dur, self.dl = ids, rel, dur, dl
        self.klen, self.ing, self.egr, self.cpu, self.seg = klen, ing, egr, cpu, seg
        for a in (ids, rel, dur, dl, klen, ing, egr, cpu, seg):
            a.setflags(write=False)
        self.node_ids = node_ids
        self._objs = dict(enumerate(objects)) if objects is not None else {}
        self.requests = _Rows(self)

    @classmethod
    def from_requests(cls, requests: Sequence[SfcRequest], index: dict[int, int], node_ids) -> RequestTable:
        reqs = sorted(requests, key=lambda r: (r.release_slot, r.request_id))
        R = len(reqs)
        try:
            ing = np.array([index[r.ingress] for r in reqs], dtype=np.int64)
            egr = np.array([index[r.egress] for r in reqs], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"request endpoint {exc} not in graph") from None
        cpu = np.zeros((R, MAX_CHAIN), dtype=np.int64)
        seg = np.zeros((R, MAX_CHAIN + 1), dtype=np.int64)
        for i, r in enumerate(reqs):
            cpu[i, : r.chain_length] = r.vnf_demands
            seg[i, : r.chain_length + 1] = r.segment_demands
        col = lambda f: np.array([f(r) for r in reqs], dtype=np.int64)  # noqa: E731
        return cls(
            col(lambda r: r.request_id), col(lambda r: r.release_slot), col(lambda r: r.duration),
            col(lambda r: r.deadline_slot), col(lambda r: r.chain_length), ing, egr, cpu, seg,
            node_ids, reqs,
        )

    @classmethod
    def from_arrays(cls, cols: dict, ids: np.ndarray, index: dict[int, int], node_ids) -> RequestTable:
        """Build from ``sample_request_arrays`` output (node ids, flow columns)."""
        klen = cols["klen"]
        n = len(klen)
        lookup = np.full(int(node_ids.max()) + 1 if len(node_ids) else 1, -1, dtype=np.int64)
        for node, i in index.items():
            lookup[node] = i
        flows = cols["flows"]
        seg = np.zeros((n, MAX_CHAIN + 1), dtype=np.int64)
        if n:
            seg[:, 0] = flows[:, 0]
            seg[:, 1:MAX_CHAIN] = flows
            rows = np.arange(n)
            seg[rows, klen] = flows[rows, klen - 2]
        return cls(
            ids.astype(np.int64), cols["rel"].copy(), cols["dur"].copy(), cols["dl"].copy(), klen.copy(),
            lookup[cols["ingress"]], lookup[cols["egress"]], cols["cpu"].copy(), seg, node_ids,
        )

    def request(self, row: int) -> SfcRequest:
        r = self._objs.get(row)
        if r is None:
            k = int(self.klen[row])
            r = SfcRequest(
                request_id=int(self.ids[row]),
                ingress=int(self.node_ids[self.ing[row]]),
                egress=int(self.node_ids[self.egr[row]]),
                vnf_demands=tuple(self.cpu[row, :k].tolist()),
                flow_demands=tuple(self.seg[row, 1:k].tolist()),
                release_slot=int(self.rel[row]),
                duration=int(self.dur[row]),
                deadline_slot=int(self.dl[row]),
            )
            self._objs[row] = r
        return r

    def stacked(self, rows: Sequence[int], other: RequestTable) -> RequestTable:
        """Selected rows of this table followed by all rows of ``other``."""
        rows = np.asarray(rows, dtype=np.int64)
        cat = lambda a, b: np.concatenate([a[rows], b])  # noqa: E731
        out = RequestTable(
            cat(self.ids, other.ids), cat(self.rel, other.rel), cat(self.dur, other.dur),
            cat(self.dl, other.dl), cat(self.klen, other.klen), cat(self.ing, other.ing),
            cat(self.egr, other.egr), cat(self.cpu, other.cpu), cat(self.seg, other.seg), self.node_ids,
        )
        for i, r in enumerate(rows.tolist()):
            if r in self._objs:
                out._objs[i] = self._objs[r]
        return out

    def __len__(self):
        return len(self.rel)


class _Rows:
    """Read-only sequence view of a table's rows as :class:`SfcRequest`."""

    __slots__ = ("_t",)

    def __init__(self, table: RequestTable):
        self._t = table

    def __len__(self):
        return len(self._t)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return tuple(self._t.request(r) for r in range(*i.indices(len(self._t))))
        if i < 0:
            i += len(self._t)
        if not 0 <= i < len(self._t):
            raise IndexError(i)
        return self._t.request(i)

    def __iter__(self):
        return (self._t.request(r) for r in range(len(self._t)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MdpState:
    """Immutable snapshot. Arrays are read-only; step builds new ones.

    Active chains are rows of ``act_*``; ``act_info`` keeps (request, action)
    per row. ``waiting`` and ``cursor`` index into ``env.table``.
    """

    env: SfcMdp = field(repr=False)
    clock: int
    residual_cpu: np.ndarray
    residual_bw: np.ndarray
    act_end: np.ndarray
    act_cpu: np.ndarray
    act_bw: np.ndarray
    act_info: tuple
    waiting: tuple[int, ...]
    cursor: int
    accepted: int = 0
    blocked: int = 0
    completed: int = 0

    @property
    def head(self) -> SfcRequest | None:
        return self.env.table.requests[self.waiting[0]] if self.waiting else None

    @property
    def waiting_requests(self) -> list[SfcRequest]:
        return [self.env.table.requests[r] for r in self.waiting]

    @property
    def pending_arrivals(self) -> tuple[SfcRequest, ...]:
        return self.env.table.requests[self.cursor:]

    @property
    def active(self) -> list[tuple[SfcRequest, Action, int]]:
        return [(req, act, int(end)) for (req, act), end in zip(self.act_info, self.act_end)]

    def violations(self) -> list[str]:
        """Conservation, nonnegativity and deadline checks; empty when valid."""
        env = self.env
        out = []
        cpu = self.residual_cpu + self.act_cpu.sum(axis=0)
        bw = self.residual_bw + self.act_bw.sum(axis=0)
        if not np.array_equal(cpu, env.cg.cpu_cap):
            out.append("cpu conservation")
        if not np.array_equal(bw, env.cg.bw_cap):
            out.append("bw conservation")
        if (self.residual_cpu < 0).any():
            out.append("negative cpu residual")
        if (self.residual_bw < 0).any():
            out.append("negative bw residual")
        for (req, _), end in zip(self.act_info, self.act_end):
            if end > req.deadline_slot:
                out.append(f"request {req.request_id} completes after its deadline")
        return out


@dataclass(frozen=True)
class StepOutcome:
    next_state: MdpState
    reward: float
    events: dict


class SfcMdp:
    """The planning MDP for one graph and one request stream.

    ``arrival_model`` (optional) lets ``planning_view`` replace the known
    future with a sampled one.
    """

    deterministic = True

    def __init__(
        self,
        graph: NetworkGraph,
        requests: Sequence[SfcRequest] = (),
        *,
        reward: RewardParams | None = None,
        k_paths: int = 3,
        a_max: int = 16,
        per_hop_delay: float = 0.1,
        horizon_end: int | None = None,
        arrival_model: WorkloadSpec | None = None,
    ):
        if k_paths < 1 or a_max < 1:
            raise ValueError("k_paths and a_max must be positive")
        self.graph = graph
        self.cg = graph.compiled
        self.reward = reward or RewardParams()
        self.k_paths = k_paths
        self.a_max = a_max
        self.per_hop_delay = per_hop_delay
        self.arrival_model = arrival_model
        self.paths = self.cg.path_table(k_paths)
        self.table = RequestTable.from_requests(requests, self.cg.index, self.cg.node_ids)
        if horizon_end is None:
            horizon_end = int(self.table.rel[-1]) + 1 if len(self.table) else 0
        self.horizon_end = int(horizon_end)

    @property
    def gamma(self) -> float:
        return self.reward.gamma

    # -- states -----------------------------------------------------------

    def initial_state(self, clock: int = 0) -> MdpState:
        cg = self.cg
        s = MdpState(
            env=self,
            clock=clock,
            residual_cpu=_frozen(cg.cpu_cap.copy()),
            residual_bw=_frozen(cg.bw_cap.copy()),
            act_end=_frozen(np.zeros(0, dtype=np.int64)),
            act_cpu=_frozen(np.zeros((0, cg.n), dtype=np.int64)),
            act_bw=_frozen(np.zeros((0, cg.m), dtype=np.int64)),
            act_info=(),
            waiting=(),
            cursor=0,
        )
        t = self.table
        cursor = 0
        while cursor < len(t) and t.rel[cursor] < clock:
            cursor += 1  # stream entries before the start slot are dropped
        s = _replace(s, cursor=cursor)
        return self._admit(s, [])[0]

    def _admit(self, s: MdpState, arrived: list) -> tuple[MdpState, int]:
        """Move arrivals released by ``s.clock`` into the queue; auto-block the hopeless."""
        t = self.table
        waiting = list(s.waiting)
        cursor = s.cursor
        while cursor < len(t) and t.rel[cursor] <= s.clock:
            waiting.append(cursor)
            arrived.append(int(t.ids[cursor]))
            cursor += 1
        keep, dropped = [], []
        for r in waiting:
            if s.clock + t.dur[r] > t.dl[r]:
                dropped.append(r)
            else:
                keep.append(r)
        s = _replace(s, waiting=tuple(keep), cursor=cursor, blocked=s.blocked + len(dropped))
        return s, dropped

    def is_terminal(self, s: MdpState) -> bool:
        return s.clock >= self.horizon_end

    def clock(self, s: MdpState) -> int:
        return s.clock

    # -- actions ----------------------------------------------------------

    def enumerate_actions(self, s: MdpState, k_paths: int | None = None, a_max: int | None = None) -> list[Action]:
        if not s.waiting:
            return [Action(WAIT)]
        row = s.waiting[0]
        t = self.table
        rid = int(t.ids[row])
        acts = [Action(REJECT, rid)]
        if s.clock + 1 + t.dur[row] <= t.dl[row]:
            acts.append(Action(WAIT, rid))
        acts.extend(self._place_candidates(s, row, k_paths or self.k_paths, a_max or self.a_max))
        return acts

    legal_actions = enumerate_actions

    def _place_candidates(self, s: MdpState, row: int, k_paths: int, a_max: int) -> list[Action]:
        t = self.table
        if s.clock + t.dur[row] > t.dl[row]:
            return []
        k = int(t.klen[row])
        dem, seg = t.cpu[row], t.seg[row]
        rc, rb = s.residual_cpu, s.residual_bw
        if dem[:k].sum() > rc.sum():
            return []
        table = self.cg.path_table(k_paths)
        pair = int(t.ing[row]) * self.cg.n + int(t.egr[row])
        ids = self.cg.node_ids
        found: list[tuple[int, tuple[int, ...]]] = []
        seen = set()
        pos = np.zeros(MAX_CHAIN, dtype=np.int64)

        tags = {}

        def keep(rank, links, L, tag):
            key = (rank, tuple(int(p) for p in pos[:k]))
            if key not in seen and kernels.bw_fits(links, L, rb, seg, k, pos):
                seen.add(key)
                found.append(key)
                tags[key] = f"{rank}{tag}"

        paths = []
        for rank in range(k_paths):
            L = int(table.length[pair, rank])
            if L == 0:
                continue
            path, links = table.nodes[pair, rank, :L], table.links[pair, rank, : max(L - 1, 1)]
            paths.append((rank, path, links, L))
            # greedy max-residual, greedy earliest, then one perturbed variant of each
            if kernels.assign_maxres(path, L, rc, dem, k, ids, 0, pos):
                keep(rank, links, L, "m")
            if kernels.assign_earliest(path, L, rc, dem, k, 0, pos):
                first = int(pos[0])
                keep(rank, links, L, "e")
                if kernels.assign_earliest(path, L, rc, dem, k, first + 1, pos):
                    keep(rank, links, L, "e+")
            if kernels.assign_maxres(path, L, rc, dem, k, ids, 1, pos):
                keep(rank, links, L, "m+")
        found = found[:a_max]
        out = np.zeros((a_max, MAX_CHAIN), dtype=np.int64)
        for rank, path, links, L in paths:
            if len(found) >= a_max:
                break
            count = kernels.fill_monotone(path, links, L, rc, rb, dem, seg, k, a_max, out)
            for c in range(count):
                key = (rank, tuple(out[c, :k].tolist()))
                if key not in seen:
                    seen.add(key)
                    found.append(key)
                    tags[key] = f"{rank}x"
                    if len(found) >= a_max:
                        break
        return [self._place_from_positions(s, row, table, pair, rank, p, tags[(rank, p)]) for rank, p in found]

    def _place_from_positions(self, s, row, table, pair, rank, positions, tag="") -> Action:
        t = self.table
        L = int(table.length[pair, rank])
        path = table.nodes[pair, rank, :L]
        ids = self.cg.node_ids[path].tolist()
        k = len(positions)
        cuts = (0,) + tuple(positions) + (L - 1,)
        routing = tuple(tuple(ids[cuts[i]: cuts[i + 1] + 1]) for i in range(k + 1))
        cpu = np.zeros(self.cg.n, dtype=np.int64)
        bw = np.zeros(self.cg.m, dtype=np.int64)
        pos = np.zeros(MAX_CHAIN, dtype=np.int64)
        pos[:k] = positions
        kernels.apply_usage(path, table.links[pair, rank], L, t.cpu[row], t.seg[row], k, pos, cpu, bw, 1)
        return Action._trusted(
            PLACE, int(t.ids[row]), tuple(ids[p] for p in positions), routing, s.clock,
            _frozen(cpu), _frozen(bw), tag,
        )

    def usage(self, a: Action, req: SfcRequest) -> tuple[np.ndarray, np.ndarray]:
        """CPU per node and bandwidth per link consumed by a Place action."""
        if a.cpu_use is not None and a.bw_use is not None:
            return a.cpu_use, a.bw_use
        cg = self.cg
        if len(a.assignment) != req.chain_length:
            raise ValueError("assignment does not cover every VNF")
        if a.routing[0][0] != req.ingress or a.routing[-1][-1] != req.egress:
            raise ValueError("routing does not join ingress and egress")
        cpu = np.zeros(cg.n, dtype=np.int64)
        bw = np.zeros(cg.m, dtype=np.int64)
        try:
            for node, d in zip(a.assignment, req.vnf_demands):
                cpu[cg.index[node]] += d
            for seg, d in zip(a.routing, req.segment_demands):
                for u, v in zip(seg, seg[1:]):
                    bw[cg.link_index[_link(u, v)]] += d
        except KeyError as exc:
            raise ValueError(f"routing uses unknown node or link {exc}") from None
        return cpu, bw

    def is_feasible(self, s: MdpState, a: Action) -> bool:
        """Reject needs a head to reject; Wait is always allowed; Place is checked on resources and deadline."""
        if a.kind == WAIT:
            return True
        if not s.waiting:
            return False
        req = self.table.requests[s.waiting[0]]
        if a.kind == REJECT:
            return True
        if a.request_id != req.request_id or a.start_slot != s.clock:
            return False
        if a.start_slot + req.duration > req.deadline_slot:
            return False
        cpu, bw = self.usage(a, req)
        return bool((cpu <= s.residual_cpu).all() and (bw <= s.residual_bw).all())

    # -- transition ------------------------------------------------------

    def step(self, s: MdpState, a: Action, rng=None) -> StepOutcome:
        if s.env is not self:
            raise ValueError("state belongs to a different MDP")
        if not self.is_feasible(s, a):
            raise ValueError(f"infeasible action {a.sig} at slot {s.clock}")
        rp = self.reward
        events = {"completed": [], "arrived": [], "blocked": [], "accepted": None}
        reward = 0.0
        advance = True
        if a.kind == PLACE:
            row = s.waiting[0]
            req = self.table.requests[row]
            cpu, bw = self.usage(a, req)
            delay = e2e_delay(req, a, s.clock, self.per_hop_delay)
            reward -= rp.delay_weight * delay / (req.deadline_slot - req.release_slot)
            s = _replace(
                s,
                residual_cpu=_frozen(s.residual_cpu - cpu),
                residual_bw=_frozen(s.residual_bw - bw),
                act_end=_frozen(np.append(s.act_end, s.clock + req.duration)),
                act_cpu=_frozen(np.vstack([s.act_cpu, cpu[None, :]])),
                act_bw=_frozen(np.vstack([s.act_bw, bw[None, :]])),
                act_info=s.act_info + ((req, a),),
                waiting=s.waiting[1:],
                accepted=s.accepted + 1,
            )
            events["accepted"] = req.request_id
            advance = not s.waiting
        elif a.kind == REJECT:
            rid = int(self.table.ids[s.waiting[0]])
            s = _replace(s, waiting=s.waiting[1:], blocked=s.blocked + 1)
            events["blocked"].append(rid)
            advance = not s.waiting
        if advance:
            s, n_done = self._advance(s, events)
            reward += rp.completion_reward * n_done
        reward += rp.blocking_penalty * len(events["blocked"])
        return StepOutcome(s, reward, events)

    def _advance(self, s: MdpState, events: dict) -> tuple[MdpState, int]:
        clock = s.clock + 1
        done = s.act_end <= clock
        n_done = int(done.sum())
        if n_done:
            live = ~done
            events["completed"].extend(req.request_id for (req, _), d in zip(s.act_info, done) if d)
            s = _replace(
                s,
                residual_cpu=_frozen(s.residual_cpu + s.act_cpu[done].sum(axis=0)),
                residual_bw=_frozen(s.residual_bw + s.act_bw[done].sum(axis=0)),
                act_end=_frozen(s.act_end[live]),
                act_cpu=_frozen(s.act_cpu[live]),
                act_bw=_frozen(s.act_bw[live]),
                act_info=tuple(x for x, d in zip(s.act_info, done) if not d),
                completed=s.completed + n_done,
            )
        s = _replace(s, clock=clock)
        s, dropped = self._admit(s, events["arrived"])
        events["blocked"].extend(int(self.table.ids[r]) for r in dropped)
        return s, n_done

    # -- abstraction -----------------------------------------------------

    def abstraction(self, s: MdpState) -> tuple:
        """(node buckets, link buckets, sorted waiting signatures); clock left out."""
        cg = self.cg
        nodes = kernels.utilization_buckets(cg.cpu_cap - s.residual_cpu, cg.cpu_cap, UTIL_LEVELS)
        links = kernels.utilization_buckets(cg.bw_cap - s.residual_bw, cg.bw_cap, UTIL_LEVELS)
        t = self.table
        sigs = sorted(
            (
                int(t.klen[r]),
                int(t.cpu[r].sum()),
                int(t.seg[r].sum()),
                slack_bucket(int(t.dl[r]) - s.clock - int(t.dur[r])),
            )
            for r in s.waiting
        )
        return tuple(nodes.tolist()), tuple(links.tolist()), tuple(sigs)

    def state_key(self, s: MdpState) -> str:
        nodes, links, sigs = self.abstraction(s)
        w = ";".join(".".join(map(str, x)) for x in sigs)
        return "n" + "".join(map(str, nodes)) + "|l" + "".join(map(str, links)) + "|w" + w

    def coarse_key(self, s: MdpState) -> str:
        """Graph-size-free summary used to match states across tasks.

        Head request (chain length, CPU bucket, can-wait flag), queue length
        bucket and the mean node and link utilization in quarters.
        """
        if not s.waiting:
            return "idle"
        cg, t = self.cg, self.table
        r = s.waiting[0]
        cpu_b = min(int(t.cpu[r].sum()) // 4, 3)
        can_wait = int(s.clock + 1 + t.dur[r] <= t.dl[r])
        q = min(len(s.waiting) - 1, 3)
        node_u = 1.0 - s.residual_cpu.sum() / max(cg.cpu_cap.sum(), 1)
        link_u = 1.0 - s.residual_bw.sum() / max(cg.bw_cap.sum(), 1)
        return f"k{t.klen[r]}c{cpu_b}w{can_wait}q{q}u{min(int(4 * node_u), 3)}{min(int(4 * link_u), 3)}"

    @staticmethod
    def coarse_sig(a: Action) -> str:
        """Action class: R, W or P plus its candidate tag (path rank and generator)."""
        return f"P{a.tag}" if a.kind == PLACE else a.sig

    # -- policies ----------------------------------------------------------

    def default_action(self, s: MdpState) -> Action:
        from .baselines import nf_heuristic

        return nf_heuristic(s, self.k_paths)

    def kernel_args(self, s: MdpState):
        t, p = self.table, self.paths
        waiting = np.array(s.waiting, dtype=np.int64)
        return (
            s.residual_cpu, s.residual_bw, s.act_end, s.act_cpu, s.act_bw, len(s.act_end),
            waiting, len(waiting), s.cursor,
            t.rel, t.ing, t.egr, t.klen, t.cpu, t.seg, t.dur, t.dl, len(t),
            p.nodes, p.links, p.length, self.k_paths, self.cg.node_ids,
        )

    def rollout(self, s: MdpState, horizon: int, rng=None) -> float:
        """Discounted NF-Heuristic return over ``horizon`` slots (compiled kernel)."""
        if horizon <= 0:
            return 0.0
        rp = self.reward
        args = self.kernel_args(s)
        return float(kernels.rollout_kernel(
            s.clock, self.horizon_end, horizon, *args,
            rp.gamma, rp.completion_reward, rp.blocking_penalty, rp.delay_weight, self.per_hop_delay,
        ))

    # -- sampled futures ---------------------------------------------------

    def planning_view(self, s: MdpState, rng: np.random.Generator, lookahead: int) -> tuple[SfcMdp, MdpState]:
        """Copy of the MDP where everything after ``s.clock`` is a fresh sample.

        Requests already waiting keep their data; future arrivals are drawn
        from ``arrival_model`` for ``lookahead`` slots. Without an arrival
        model the known stream is kept (clairvoyant view).
        """
        if self.arrival_model is None:
            return self, s
        cols = sample_request_arrays(endpoints_for(self.graph), self.arrival_model, s.clock + 1, lookahead, rng)
        ids = -1 - np.arange(len(cols["rel"]), dtype=np.int64)
        future = RequestTable.from_arrays(cols, ids, self.cg.index, self.cg.node_ids)
        view = SfcMdp.__new__(SfcMdp)
        view.__dict__.update(self.__dict__)
        view.table = self.table.stacked(s.waiting, future)
        view.horizon_end = min(self.horizon_end, s.clock + lookahead + 1)
        n_wait = len(s.waiting)
        vs = _replace(s, env=view, waiting=tuple(range(n_wait)), cursor=n_wait)
        return view, vs


def _replace(s: MdpState, **kw) -> MdpState:
    d = dict(s.__dict__)
    d.update(kw)
    out = object.__new__(MdpState)
    out.__dict__.update(d)
    return out


def slack_bucket(slack: int) -> int:
    """0, 1, 2-3, 4-7, 8+ slots of remaining slack map to 0..4."""
    return min(max(slack, 0).bit_length(), 4)


TRAJECTORY_FIELDS = ("slot", "action_variant", "request_id", "reward", "accepted", "blocked", "completed")


def trajectory_row(s: MdpState, a: Action, out: StepOutcome) -> dict:
    ev = out.events
    return {
        "slot": s.clock,
        "action_variant": a.kind,
        "request_id": "" if a.request_id is None else a.request_id,
        "reward": repr(float(out.reward)),
        "accepted": int(ev["accepted"] is not None),
        "blocked": len(ev["blocked"]),
        "completed": len(ev["completed"]),
    }


def write_trajectory(rows: Iterable[dict], path: str | Path, extra: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(TRAJECTORY_FIELDS) + list(extra), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
