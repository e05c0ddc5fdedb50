"""Graph drift between two network snapshots and its MDP-distance surrogate."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .network import NetworkGraph

COMPONENTS = ("spec", "cap", "bw", "edit")


@dataclass(frozen=True)
class DriftWeights:
    """Component weights, scale divisors and the Lipschitz constant.

    A normalizer left as ``None`` is filled from the two graphs (mean of the
    per-graph value: node count, total CPU, total bandwidth, node+link count).
    """

    w_spec: float = 0.25
    w_cap: float = 0.25
    w_bw: float = 0.25
    w_edit: float = 0.25
    rho_spec: float | None = None
    rho_cap: float | None = None
    rho_bw: float | None = None
    rho_edit: float | None = None
    lipschitz_c: float = 1.0

    def __post_init__(self):
        ws = (self.w_spec, self.w_cap, self.w_bw, self.w_edit)
        if any(w < 0 for w in ws) or not any(w > 0 for w in ws):
            raise ValueError("weights must be nonnegative with at least one positive")
        for rho in (self.rho_spec, self.rho_cap, self.rho_bw, self.rho_edit):
            if rho is not None and rho <= 0:
                raise ValueError("normalizers must be positive")
        if self.lipschitz_c <= 0:
            raise ValueError("lipschitz_c must be positive")

    @classmethod
    def unit(cls, component: str, lipschitz_c: float = 1.0) -> DriftWeights:
        """Weight 1 on one component, 0 elsewhere, all normalizers 1."""
        w = {f"w_{k}": float(k == component) for k in COMPONENTS}
        rho = {f"rho_{k}": 1.0 for k in COMPONENTS}
        return cls(**w, **rho, lipschitz_c=lipschitz_c)

    def with_c(self, c: float) -> DriftWeights:
        return replace(self, lipschitz_c=c)

    def normalizers(self, g: NetworkGraph, g2: NetworkGraph) -> dict[str, float]:
        defaults = {
            "spec": (g.n_nodes + g2.n_nodes) / 2,
            "cap": (g.total_cpu + g2.total_cpu) / 2,
            "bw": (g.total_bw + g2.total_bw) / 2,
            "edit": (g.n_nodes + g.n_links + g2.n_nodes + g2.n_links) / 2,
        }
        out = {}
        for k in COMPONENTS:
            rho = getattr(self, f"rho_{k}")
            out[k] = float(rho) if rho is not None else max(float(defaults[k]), 1.0)
        return out


@dataclass(frozen=True)
class DriftReport:
    delta_spec: float
    delta_cap: float
    delta_bw: float
    delta_edit: float
    delta_g: float
    mdp_distance_bound: float

    def csv_row(self) -> str:
        vals = (
            self.delta_spec,
            self.delta_cap,
            self.delta_bw,
            self.delta_edit,
            self.delta_g,
            self.mdp_distance_bound,
        )
        return ",".join(repr(float(v)) for v in vals)


CSV_HEADER = "delta_spec,delta_cap,delta_bw,delta_edit,delta_g,bound"


def laplacian_spectrum(g: NetworkGraph) -> np.ndarray:
    n = g.n_nodes
    if n == 0:
        return np.zeros(0)
    idx = {v: i for i, v in enumerate(g.nodes)}
    lap = np.zeros((n, n))
    for u, v in g.links:
        i, j = idx[u], idx[v]
        lap[i, j] -= 1.0
        lap[j, i] -= 1.0
        lap[i, i] += 1.0
        lap[j, j] += 1.0
    vals = np.linalg.eigvalsh(lap)
    return np.sort(np.clip(vals, 0.0, None))


def spectral_distance(g: NetworkGraph, g2: NetworkGraph) -> float:
    """L2 gap between ascending Laplacian spectra, shorter one front-padded with zeros."""
    a, b = laplacian_spectrum(g), laplacian_spectrum(g2)
    size = max(len(a), len(b))
    a = np.concatenate([np.zeros(size - len(a)), a])
    b = np.concatenate([np.zeros(size - len(b)), b])
    return float(np.linalg.norm(a - b))


def _abs_diff(x: Mapping, y: Mapping) -> float:
    return float(sum(abs(x.get(k, 0) - y.get(k, 0)) for k in set(x) | set(y)))


def capacity_delta(g: NetworkGraph, g2: NetworkGraph) -> float:
    return _abs_diff(g.cpu, g2.cpu)


def bandwidth_delta(g: NetworkGraph, g2: NetworkGraph) -> float:
    return _abs_diff(g.bw, g2.bw)


def edit_distance(g: NetworkGraph, g2: NetworkGraph) -> float:
    nodes = set(g.cpu) ^ set(g2.cpu)
    links = set(g.bw) ^ set(g2.bw)
    return float(len(nodes) + len(links))


def graph_drift(g: NetworkGraph, g2: NetworkGraph, w: DriftWeights | None = None) -> DriftReport:
    w = w or DriftWeights()
    raw = {
        "spec": spectral_distance(g, g2),
        "cap": capacity_delta(g, g2),
        "bw": bandwidth_delta(g, g2),
        "edit": edit_distance(g, g2),
    }
    rho = w.normalizers(g, g2)
    delta_g = sum(getattr(w, f"w_{k}") * raw[k] / rho[k] for k in COMPONENTS)
    return DriftReport(
        delta_spec=raw["spec"],
        delta_cap=raw["cap"],
        delta_bw=raw["bw"],
        delta_edit=raw["edit"],
        delta_g=float(delta_g),
        mdp_distance_bound=float(w.lipschitz_c * delta_g),
    )


class SurrogateError(ValueError):
    """Observed MDP distance on pairs the drift metric calls identical."""


def calibrate_lipschitz_c(
    samples: Iterable[tuple[DriftReport | float, float]], safety: float = 1.1
) -> float:
    """Smallest c with c * delta_g >= d_hat on every sample, times ``safety``."""
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    best = 0.0
    positive = 0
    for report, d_hat in samples:
        dg = report.delta_g if isinstance(report, DriftReport) else float(report)
        if dg > 0:
            positive += 1
            best = max(best, d_hat / dg)
        elif d_hat > 1e-12:
            raise SurrogateError(f"d_hat={d_hat:g} on a pair with zero drift")
    if positive == 0:
        raise ValueError("need at least one sample with delta_g > 0")
    # all-zero distances: any positive c is sound
    return max(best * safety, 1e-12)
