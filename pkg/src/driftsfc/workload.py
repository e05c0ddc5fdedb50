"""Seeded SFC request streams with Poisson arrivals."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .network import NetworkGraph

CHAIN_LENGTHS = (3, 4, 5)
MIN_CHAIN, MAX_CHAIN = min(CHAIN_LENGTHS), max(CHAIN_LENGTHS)


@dataclass(frozen=True)
class SfcRequest:
    """One service chain.

    ``flow_demands`` has one entry per VNF-to-VNF hop (chain length - 1); the
    ingress segment reuses the first entry and the egress segment the last.
    """

    request_id: int
    ingress: int
    egress: int
    vnf_demands: tuple[int, ...]
    flow_demands: tuple[int, ...]
    release_slot: int
    duration: int
    deadline_slot: int

    def __post_init__(self):
        object.__setattr__(self, "vnf_demands", tuple(int(x) for x in self.vnf_demands))
        object.__setattr__(self, "flow_demands", tuple(int(x) for x in self.flow_demands))
        k = len(self.vnf_demands)
        if not MIN_CHAIN <= k <= MAX_CHAIN:
            raise ValueError(f"chain length {k} outside [{MIN_CHAIN}, {MAX_CHAIN}]")
        if len(self.flow_demands) != k - 1:
            raise ValueError("flow_demands must have chain length - 1 entries")
        if min(self.vnf_demands) <= 0 or min(self.flow_demands) <= 0:
            raise ValueError("demands must be positive")
        if self.duration < 1:
            raise ValueError("duration must be at least one slot")
        if self.deadline_slot < self.release_slot + self.duration:
            raise ValueError("deadline precedes release + duration")
        if self.ingress == self.egress:
            raise ValueError("ingress and egress must differ")

    @property
    def chain_length(self) -> int:
        return len(self.vnf_demands)

    @property
    def segment_demands(self) -> tuple[int, ...]:
        """Bandwidth of the k+1 routed segments, ingress to egress."""
        f = self.flow_demands
        return (f[0],) + f + (f[-1],)

    @property
    def total_cpu(self) -> int:
        return sum(self.vnf_demands)

    @property
    def slack(self) -> int:
        return self.deadline_slot - self.release_slot - self.duration

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> SfcRequest:
        return cls(**json.loads(line))


@dataclass(frozen=True)
class WorkloadSpec:
    """Arrival process and demand ranges; ranges are inclusive integer bounds."""

    base_arrival_rate: float = 1.0
    load_factor: float = 1.0
    horizon: int = 100
    cpu_demand: tuple[int, int] = (1, 4)
    bw_demand: tuple[int, int] = (1, 3)
    mean_duration: float = 10.0
    slack: tuple[int, int] = (5, 15)
    seed: int = 0

    def __post_init__(self):
        if self.base_arrival_rate <= 0 or self.load_factor < 0:
            raise ValueError("arrival rate must be positive and load factor nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if self.mean_duration < 1:
            raise ValueError("mean duration must be at least one slot")

    @property
    def arrival_rate(self) -> float:
        return self.base_arrival_rate * self.load_factor

    @property
    def mean_cpu_time(self) -> float:
        """Expected CPU-slots consumed by one request."""
        mean_len = float(np.mean(CHAIN_LENGTHS))
        return mean_len * sum(self.cpu_demand) / 2 * self.mean_duration

    def normalized_load(self, g: NetworkGraph) -> float:
        return self.arrival_rate * self.mean_cpu_time / g.total_cpu

    def with_seed(self, seed: int) -> WorkloadSpec:
        return replace(self, seed=seed)


def scale_load(spec: WorkloadSpec, factor: float) -> WorkloadSpec:
    if factor <= 0:
        raise ValueError("factor must be positive")
    return replace(spec, load_factor=spec.load_factor * factor)


def rate_for_unit_load(g: NetworkGraph, spec: WorkloadSpec | None = None) -> float:
    """Base arrival rate at which load_factor equals the normalized offered load."""
    spec = spec or WorkloadSpec()
    return g.total_cpu / spec.mean_cpu_time


def load_sweep(spec: WorkloadSpec, loads: Sequence[float]) -> list[WorkloadSpec]:
    return [replace(spec, load_factor=float(x)) for x in loads]


def _draw_request(rng, request_id, endpoints, spec, slot) -> SfcRequest:
    k = int(rng.choice(CHAIN_LENGTHS))
    i, j = rng.choice(len(endpoints), size=2, replace=False)
    lo, hi = spec.cpu_demand
    vnf = rng.integers(lo, hi + 1, size=k)
    lo, hi = spec.bw_demand
    flows = rng.integers(lo, hi + 1, size=k - 1)
    duration = int(rng.geometric(1.0 / spec.mean_duration))
    slack = int(rng.integers(spec.slack[0], spec.slack[1] + 1))
    return SfcRequest(
        request_id=request_id,
        ingress=int(endpoints[i]),
        egress=int(endpoints[j]),
        vnf_demands=tuple(vnf.tolist()),
        flow_demands=tuple(flows.tolist()),
        release_slot=slot,
        duration=duration,
        deadline_slot=slot + duration + slack,
    )


def endpoints_for(g: NetworkGraph) -> tuple[int, ...]:
    """Access nodes, or every node when fewer than two access nodes exist."""
    access = g.access_nodes
    return access if len(access) >= 2 else g.nodes


def generate_workload(
    g: NetworkGraph, spec: WorkloadSpec, *, start_slot: int = 0, first_id: int = 0,
    rng: np.random.Generator | None = None,
) -> list[SfcRequest]:
    """Requests for slots ``start_slot .. start_slot + horizon - 1`` in release order."""
    if g.n_nodes < 2:
        raise ValueError("need at least two nodes")
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    endpoints = endpoints_for(g)
    rate = spec.arrival_rate
    out: list[SfcRequest] = []
    if rate == 0:
        return out
    counts = rng.poisson(rate, size=spec.horizon)
    for offset, count in enumerate(counts):
        for _ in range(int(count)):
            out.append(_draw_request(rng, first_id + len(out), endpoints, spec, start_slot + offset))
    return out


def save_workload(requests: Iterable[SfcRequest], path: str | Path) -> None:
    Path(path).write_text("".join(r.to_json() + "\n" for r in requests))


def load_workload(path: str | Path) -> list[SfcRequest]:
    return [SfcRequest.from_json(line) for line in Path(path).read_text().splitlines() if line]


def sample_request_arrays(
    endpoints: Sequence[int], spec: WorkloadSpec, start_slot: int, horizon: int, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    """Columnar draw from the same distribution as ``generate_workload``.

    Used by planners to imagine futures; the draw order differs from
    ``generate_workload``, so streams are not interchangeable seed-for-seed.
    Keys: rel, ingress, egress, klen, cpu (n x 5), flows (n x 4), dur, dl.
    """
    counts = rng.poisson(spec.arrival_rate, size=max(horizon, 0))
    n = int(counts.sum())
    rel = np.repeat(start_slot + np.arange(len(counts), dtype=np.int64), counts)
    klen = rng.choice(np.array(CHAIN_LENGTHS, dtype=np.int64), size=n)
    e = np.asarray(endpoints, dtype=np.int64)
    i = rng.integers(0, len(e), size=n)
    j = rng.integers(0, len(e) - 1, size=n)
    j = j + (j >= i)
    lo, hi = spec.cpu_demand
    cpu = rng.integers(lo, hi + 1, size=(n, MAX_CHAIN))
    cpu[np.arange(MAX_CHAIN)[None, :] >= klen[:, None]] = 0
    lo, hi = spec.bw_demand
    flows = rng.integers(lo, hi + 1, size=(n, MAX_CHAIN - 1))
    flows[np.arange(MAX_CHAIN - 1)[None, :] >= (klen - 1)[:, None]] = 0
    dur = rng.geometric(1.0 / spec.mean_duration, size=n).astype(np.int64)
    slack = rng.integers(spec.slack[0], spec.slack[1] + 1, size=n)
    return {
        "rel": rel, "ingress": e[i], "egress": e[j], "klen": klen,
        "cpu": cpu.astype(np.int64), "flows": flows.astype(np.int64),
        "dur": dur, "dl": rel + dur + slack,
    }
