"""Episode driver, metrics and the three experiment scenarios.

Every output file is written from sorted rows with ``repr`` floats, so a
re-run with the same config and seeds is byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .baselines import NfPlanner
from .drift import DriftWeights, graph_drift
from .lifelong import KnowledgeBase, LisfcPlanner, TransferParams
from .mdp import PLACE, REJECT, WAIT, Action, RewardParams, SfcMdp, e2e_delay
from .network import NetworkGraph, graph_family
from .search import UctParams, UctPlanner
from .workload import SfcRequest, WorkloadSpec, generate_workload, rate_for_unit_load

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

PLANNERS = ("nf_heuristic", "umcts", "lisfc")
SCENARIOS = ("load_sweep", "drift_transfer", "convergence")
DECISION_FIELDS = (
    "scenario", "planner", "graph", "load", "seed", "decision", "slot",
    "request_id", "action", "accepted", "blocked", "e2e_delay", "sims_used",
)
AGGREGATE_FIELDS = (
    "scenario", "planner", "graph", "delta_g", "load", "seed", "decisions", "requests",
    "accepted", "blocked", "pending", "blocking", "p95_delay", "mean_sims", "settle_decisions",
)
SUMMARY_FIELDS = (
    "scenario", "planner", "graph", "delta_g", "load", "seeds",
    "blocking_mean", "blocking_se", "p95_mean", "p95_se", "sims_mean", "sims_se",
    "settle_mean", "settle_se",
)
# planner streams never share draws with the workload generator
_PLANNER_STREAM = 0x5FC
_AUTO = "auto_block"


class ConfigError(ValueError):
    pass


def percentile(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    if len(values) == 0:
        raise ValueError("percentile of an empty sample")
    if not 0 < p <= 100:
        raise ValueError("p must lie in (0, 100]")
    ordered = sorted(values)
    rank = math.ceil(p / 100.0 * len(ordered))
    return float(ordered[max(rank, 1) - 1])


def running_blocking(blocked_flags: Sequence[int]) -> list[float]:
    """Cumulative blocked count over decisions 1..t, divided by t."""
    out, total = [], 0
    for t, b in enumerate(blocked_flags, 1):
        total += b
        out.append(total / t)
    return out


def decisions_to_within(series: Sequence[float], frac: float = 0.1, floor: float = 0.005) -> int:
    """First decision (1-based) after which the series stays within frac of its final value.

    The band is ``max(frac * final, floor)`` so a final value near zero does
    not demand exact equality.
    """
    if not series:
        return 0
    final = series[-1]
    band = max(frac * abs(final), floor)
    t = len(series)
    while t > 0 and abs(series[t - 1] - final) <= band:
        t -= 1
    return t + 1


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class GraphConfig:
    n_nodes: int = 20
    n_links: int = 40
    base_seed: int = 1
    perturb_seed: int = 7

    def family(self) -> dict[str, NetworkGraph]:
        return graph_family(self.n_nodes, self.n_links, self.base_seed, self.perturb_seed)


@dataclass(frozen=True)
class EnvConfig:
    """How the simulator and every planner see the task.

    ``drain`` extra slots after the last arrival let waiting requests resolve,
    so no planner gains from leaving requests pending at the horizon.
    ``futures`` is ``sampled`` (planners imagine arrivals from the workload
    model) or ``trace`` (planners see the real stream).
    """

    reward: RewardParams = field(default_factory=RewardParams)
    k_paths: int = 3
    a_max: int = 16
    per_hop_delay: float = 0.1
    drain: int = 16
    futures: str = "sampled"

    def __post_init__(self):
        if self.drain < 0:
            raise ConfigError("drain must be nonnegative")
        if self.futures not in ("sampled", "trace"):
            raise ConfigError(f"futures must be 'sampled' or 'trace', got {self.futures!r}")


@dataclass(frozen=True)
class PlannerConfig:
    name: str
    uct: UctParams = field(default_factory=UctParams)
    transfer: TransferParams = field(default_factory=TransferParams)
    key: str = "fine"
    early_stop: bool = True
    eliminate: bool = True

    def __post_init__(self):
        if self.name not in PLANNERS:
            raise ConfigError(f"unknown planner {self.name!r}")
        if self.key not in ("fine", "coarse"):
            raise ConfigError(f"key must be 'fine' or 'coarse', got {self.key!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    planners: tuple[str, ...]
    seeds: tuple[int, ...]
    graph: GraphConfig = field(default_factory=GraphConfig)
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    env: EnvConfig = field(default_factory=EnvConfig)
    planner_cfg: Mapping[str, PlannerConfig] = field(default_factory=dict)
    loads: tuple[float, ...] = (1.0,)
    graphs: tuple[str, ...] = ("G0", "G1", "G2", "G3")
    warm_graph: str = "G0"
    warm_seeds: tuple[int, ...] = (9001, 9002, 9003)
    out: Path | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not self.planners:
            raise ConfigError("planner list is empty")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        for p in self.planners:
            if p not in PLANNERS:
                raise ConfigError(f"unknown planner {p!r}")
        if not self.loads or min(self.loads) < 0:
            raise ConfigError("loads must be a nonempty list of nonnegative numbers")

    def planner(self, name: str) -> PlannerConfig:
        cfg = self.planner_cfg.get(name)
        return cfg if cfg is not None else PlannerConfig(name)

    def with_seed_offset(self, offset: int) -> ScenarioSpec:
        return replace(self, seeds=tuple(s + offset for s in self.seeds))


def _tuple(v) -> tuple:
    return tuple(v) if isinstance(v, (list, tuple)) else (v,)


def _pick(d: dict, keys: Sequence[str], where: str) -> dict:
    extra = set(d) - set(keys)
    if extra:
        raise ConfigError(f"[{where}] unknown keys: {', '.join(sorted(extra))}")
    return {k: d[k] for k in keys if k in d}


_UCT_KEYS = ("exploration_c", "budget", "rollout_horizon", "max_depth", "delta", "lookahead")
_TRANSFER_KEYS = ("kappa", "n_cap", "n_min", "theta", "lipschitz_c")
_WEIGHT_KEYS = ("w_spec", "w_cap", "w_bw", "w_edit", "rho_spec", "rho_cap", "rho_bw", "rho_edit")


def spec_from_dict(data: Mapping) -> ScenarioSpec:
    """Build a ScenarioSpec from parsed config sections."""
    try:
        sc = dict(data["scenario"])
    except KeyError:
        raise ConfigError("missing [scenario] section") from None
    gcfg = GraphConfig(**_pick(dict(data.get("graph", {})), ("n_nodes", "n_links", "base_seed", "perturb_seed"), "graph"))
    family = gcfg.family()

    w = dict(data.get("workload", {}))
    wk = _pick(w, ("base_arrival_rate", "horizon", "cpu_demand", "bw_demand", "mean_duration", "slack"), "workload")
    for k in ("cpu_demand", "bw_demand", "slack"):
        if k in wk:
            wk[k] = tuple(int(x) for x in wk[k])
    workload = WorkloadSpec(**wk)
    if "base_arrival_rate" not in wk:
        # load_factor then equals the normalized offered load on G0
        workload = replace(workload, base_arrival_rate=rate_for_unit_load(family["G0"], workload))

    env_keys = ("gamma", "completion_reward", "blocking_penalty", "delay_weight",
                "k_paths", "a_max", "per_hop_delay", "drain", "futures")
    scen_keys = ("id", "planners", "seeds", "seed_base", "loads", "graphs", "warm_graph", "warm_seeds")
    env_raw = _pick({k: v for k, v in sc.items() if k in env_keys}, env_keys, "scenario")
    _pick({k: v for k, v in sc.items() if k not in env_keys}, scen_keys, "scenario")
    reward = RewardParams(**{k: env_raw[k] for k in ("gamma", "completion_reward", "blocking_penalty", "delay_weight") if k in env_raw})
    env = EnvConfig(reward=reward, **{k: env_raw[k] for k in ("k_paths", "a_max", "per_hop_delay", "drain", "futures") if k in env_raw})

    pcfg = {}
    for name, raw in dict(data.get("planner", {})).items():
        raw = dict(raw)
        keys = _UCT_KEYS + _TRANSFER_KEYS + _WEIGHT_KEYS + ("key", "early_stop", "eliminate")
        raw = _pick(raw, keys, f"planner.{name}")
        uct = UctParams(**{k: raw[k] for k in _UCT_KEYS if k in raw})
        weights = DriftWeights(**{k: raw[k] for k in _WEIGHT_KEYS if k in raw},
                               lipschitz_c=raw.get("lipschitz_c", 1.0))
        transfer = TransferParams(
            weights=weights, delta=uct.delta, gamma=reward.gamma, r_max=reward.r_max,
            **{k: raw[k] for k in ("kappa", "n_cap", "n_min", "theta") if k in raw},
        )
        pcfg[name] = PlannerConfig(
            name, uct, transfer, raw.get("key", "fine"),
            bool(raw.get("early_stop", True)), bool(raw.get("eliminate", True)),
        )

    seeds = sc.get("seeds", 10)
    if isinstance(seeds, int):
        base = int(sc.get("seed_base", 1))
        seeds = tuple(range(base, base + seeds))
    graphs = tuple(str(g) for g in _tuple(sc.get("graphs", ("G0", "G1", "G2", "G3"))))
    for g in graphs + (str(sc.get("warm_graph", "G0")),):
        if g not in family:
            raise ConfigError(f"unknown graph {g!r}; choose from {sorted(family)}")
    return ScenarioSpec(
        scenario=str(sc.get("id", "")),
        planners=tuple(_tuple(sc.get("planners", PLANNERS))),
        seeds=tuple(int(s) for s in seeds),
        graph=gcfg,
        workload=workload,
        env=env,
        planner_cfg=pcfg,
        loads=tuple(float(x) for x in _tuple(sc.get("loads", (1.0,)))),
        graphs=graphs,
        warm_graph=str(sc.get("warm_graph", "G0")),
        warm_seeds=tuple(int(s) for s in _tuple(sc.get("warm_seeds", (9001, 9002, 9003)))),
    )


def load_config(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return spec_from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# -- planners ------------------------------------------------------------------------


def _coarse_key(mdp, state):
    return mdp.coarse_key(state)


def _coarse_sig(mdp, state, action):
    return mdp.coarse_sig(action)


def make_planner(cfg: PlannerConfig, env: EnvConfig, kb: KnowledgeBase | None = None):
    r_max = env.reward.r_max
    if cfg.name == "nf_heuristic":
        return NfPlanner(env.k_paths)
    if cfg.name == "umcts":
        return UctPlanner(cfg.uct, r_max)
    coarse = cfg.key == "coarse"
    return LisfcPlanner(
        cfg.uct, kb if kb is not None else KnowledgeBase(cfg.transfer), r_max=r_max,
        early_stop=cfg.early_stop, eliminate=cfg.eliminate,
        key_fn=_coarse_key if coarse else None, sig_fn=_coarse_sig if coarse else None,
    )


# -- episodes ------------------------------------------------------------------------


@dataclass
class MetricsRecord:
    planner: str
    graph: str
    seed: int
    load: float
    rows: list[dict]
    requests: int
    accepted: int
    blocked: int
    delays: list[float]

    @property
    def pending(self) -> int:
        return self.requests - self.accepted - self.blocked

    @property
    def blocking(self) -> float:
        done = self.blocked + self.accepted
        return self.blocked / done if done else 0.0

    @property
    def p95_delay(self) -> float:
        return percentile(self.delays, 95) if self.delays else math.nan

    @property
    def mean_sims(self) -> float:
        sims = [r["sims_used"] for r in self.rows if r["action"] != _AUTO]
        return float(np.mean(sims)) if sims else 0.0

    @property
    def running_blocking(self) -> list[float]:
        return running_blocking([r["blocked"] for r in self.rows])

    @property
    def settle_decisions(self) -> int:
        return decisions_to_within(self.running_blocking)


def run_episode(
    graph: NetworkGraph,
    workload: WorkloadSpec,
    planner,
    env: EnvConfig | None = None,
    seed: int = 0,
    *,
    scenario: str = "",
    task_id: str | None = None,
    update_kb: bool = True,
    check: bool = False,
    requests: Sequence[SfcRequest] | None = None,
) -> MetricsRecord:
    """Play one episode from the empty network to the horizon (plus drain).

    The planner is asked once per decision epoch with a queued request. Rows
    are also written for requests that expire in the queue (sims_used 0).
    LiSFC planners archive their episode statistics at the end unless
    ``update_kb`` is False. ``check`` verifies state invariants every step.
    ``requests`` replaces the generated stream with a scripted one.
    """
    env = env or EnvConfig()
    if requests is None:
        requests = generate_workload(graph, workload.with_seed(seed))
    mdp = SfcMdp(
        graph, requests, reward=env.reward, k_paths=env.k_paths, a_max=env.a_max,
        per_hop_delay=env.per_hop_delay, horizon_end=workload.horizon + env.drain,
        arrival_model=workload if env.futures == "sampled" else None,
    )
    rng = np.random.default_rng([seed, _PLANNER_STREAM])
    name = getattr(planner, "name", type(planner).__name__)
    if hasattr(planner, "reset_episode"):
        planner.reset_episode()
    rows: list[dict] = []
    delays: list[float] = []
    base = {"scenario": scenario, "planner": name, "graph": graph.graph_id, "load": workload.load_factor, "seed": seed}

    def emit(slot, rid, action, accepted, blocked, delay, sims):
        rows.append({**base, "decision": len(rows) + 1, "slot": slot, "request_id": rid, "action": action,
                     "accepted": accepted, "blocked": blocked, "e2e_delay": delay, "sims_used": sims})

    s = mdp.initial_state(0)
    while not mdp.is_terminal(s):
        if s.waiting:
            head = s.head
            try:
                action, sims = planner.plan(s, mdp, rng)
            except Exception as exc:
                raise RuntimeError(f"{name} failed at slot {s.clock} on request {head.request_id}: {exc}") from exc
            if action.kind != WAIT and action.request_id != head.request_id:
                raise RuntimeError(f"{name} acted on request {action.request_id}, head is {head.request_id}")
        else:
            action, sims = Action(WAIT), None
        out = mdp.step(s, action, rng)
        if sims is not None:
            delay = None
            if action.kind == PLACE:
                delay = e2e_delay(head, action, s.clock, env.per_hop_delay)
                delays.append(delay)
            emit(s.clock, head.request_id, action.kind, int(action.kind == PLACE),
                 int(action.kind == REJECT), delay, int(sims))
        for rid in out.events["blocked"]:
            if action.kind == REJECT and rid == action.request_id:
                continue
            emit(s.clock, rid, _AUTO, 0, 1, None, 0)
        s = out.next_state
        if check:
            bad = s.violations()
            if bad:
                raise RuntimeError(f"invariant violated at slot {s.clock}: {', '.join(bad)}")
    if isinstance(planner, LisfcPlanner) and update_kb:
        planner.finish_episode(graph, task_id or graph.graph_id)
    return MetricsRecord(name, graph.graph_id, seed, workload.load_factor, rows,
                         len(requests), s.accepted, s.blocked, delays)


# -- scenarios ----------------------------------------------------------------------


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    records: list[tuple[MetricsRecord, float]]  # (record, delta_g)
    kb: KnowledgeBase | None = None

    def aggregate_rows(self) -> list[dict]:
        out = []
        for rec, dg in self.records:
            out.append({
                "scenario": self.spec.scenario, "planner": rec.planner, "graph": rec.graph,
                "delta_g": dg, "load": rec.load, "seed": rec.seed, "decisions": len(rec.rows),
                "requests": rec.requests, "accepted": rec.accepted, "blocked": rec.blocked,
                "pending": rec.pending, "blocking": rec.blocking, "p95_delay": rec.p95_delay,
                "mean_sims": rec.mean_sims, "settle_decisions": rec.settle_decisions,
            })
        return sorted(out, key=_run_key)

    def decision_rows(self) -> list[dict]:
        rows = [r for rec, _ in self.records for r in rec.rows]
        return sorted(rows, key=lambda r: (_run_key(r), r["decision"]))

    def summary_rows(self) -> list[dict]:
        groups: dict = {}
        for row in self.aggregate_rows():
            groups.setdefault((row["planner"], row["graph"], row["load"]), []).append(row)
        out = []
        for (planner, graph, load), rows in groups.items():
            out.append({
                "scenario": self.spec.scenario, "planner": planner, "graph": graph,
                "delta_g": rows[0]["delta_g"], "load": load, "seeds": len(rows),
                **_mean_se("blocking", [r["blocking"] for r in rows]),
                **_mean_se("p95", [r["p95_delay"] for r in rows]),
                **_mean_se("sims", [r["mean_sims"] for r in rows]),
                **_mean_se("settle", [r["settle_decisions"] for r in rows]),
            })
        return sorted(out, key=lambda r: (r["delta_g"], r["graph"], r["load"], _planner_rank(r["planner"])))

    def summary(self, planner: str, graph: str | None = None, load: float | None = None) -> dict:
        for r in self.summary_rows():
            if r["planner"] == planner and (graph is None or r["graph"] == graph) and (load is None or r["load"] == load):
                return r
        raise KeyError((planner, graph, load))

    def mean_curve(self, planner: str, graph: str) -> tuple[np.ndarray, np.ndarray]:
        """Running blocking averaged over seeds, truncated to the shortest episode."""
        series = [rec.running_blocking for rec, _ in self.records if rec.planner == planner and rec.graph == graph]
        series = [x for x in series if x]
        if not series:
            return np.zeros(0), np.zeros(0)
        n = min(len(x) for x in series)
        arr = np.array([x[:n] for x in series])
        se = arr.std(axis=0, ddof=1) / math.sqrt(len(series)) if len(series) > 1 else np.zeros(n)
        return arr.mean(axis=0), se

    def write(self, out: str | Path) -> Path:
        out = Path(out)
        (out / "curves").mkdir(parents=True, exist_ok=True)
        _write_csv(out / "decisions.csv", DECISION_FIELDS, self.decision_rows())
        _write_csv(out / "aggregates.csv", AGGREGATE_FIELDS, self.aggregate_rows())
        summary = self.summary_rows()
        _write_csv(out / "summary.csv", SUMMARY_FIELDS, summary)
        sc = self.spec.scenario
        if sc == "load_sweep":
            _write_dat(out / "curves" / "blocking_vs_load.dat", ("load", "planner", "blocking_mean", "blocking_se"),
                       [(r["load"], r["planner"], r["blocking_mean"], r["blocking_se"]) for r in summary])
        elif sc == "drift_transfer":
            _write_dat(out / "curves" / "sims_vs_drift.dat",
                       ("delta_g", "graph", "planner", "sims_mean", "sims_se", "blocking_mean", "p95_mean"),
                       [(r["delta_g"], r["graph"], r["planner"], r["sims_mean"], r["sims_se"], r["blocking_mean"], r["p95_mean"])
                        for r in summary])
        else:
            _write_dat(out / "curves" / "convergence_summary.dat",
                       ("delta_g", "graph", "planner", "final_mean", "final_se", "settle_mean", "settle_se"),
                       [(r["delta_g"], r["graph"], r["planner"], r["blocking_mean"], r["blocking_se"],
                         r["settle_mean"], r["settle_se"]) for r in summary])
            for r in summary:
                mean, se = self.mean_curve(r["planner"], r["graph"])
                _write_dat(out / "curves" / f"running_{r['planner']}_{r['graph']}.dat",
                           ("decision", "running_blocking_mean", "running_blocking_se"),
                           [(i + 1, m, e) for i, (m, e) in enumerate(zip(mean, se))])
        return out


def _planner_rank(name: str) -> int:
    return PLANNERS.index(name) if name in PLANNERS else len(PLANNERS)


def _run_key(r: dict):
    return (r["graph"], r["load"], _planner_rank(r["planner"]), r["planner"], r["seed"])


def _mean_se(prefix: str, values: list[float]) -> dict:
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return {f"{prefix}_mean": math.nan, f"{prefix}_se": math.nan}
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return {f"{prefix}_mean": mean, f"{prefix}_se": se}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, fields: Sequence[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])
    path.write_text(buf.getvalue())


def _write_dat(path: Path, cols: Sequence[str], rows) -> None:
    lines = ["# " + " ".join(cols)]
    lines += [" ".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _log(msg: str, verbose: bool) -> None:
    if verbose:
        print(msg, file=sys.stderr, flush=True)


def scenario_load_sweep(spec: ScenarioSpec, verbose: bool = False) -> ScenarioResult:
    """Every planner over the load grid on G0; LiSFC starts each run with an empty KB."""
    g0 = spec.graph.family()["G0"]
    records = []
    for load in spec.loads:
        wl = replace(spec.workload, load_factor=load)
        for name in spec.planners:
            for seed in spec.seeds:
                planner = make_planner(spec.planner(name), spec.env)
                rec = run_episode(g0, wl, planner, spec.env, seed, scenario=spec.scenario)
                records.append((rec, 0.0))
                _log(f"load={load} {name} seed={seed} blocking={rec.blocking:.4f} sims={rec.mean_sims:.1f}", verbose)
    return ScenarioResult(spec, records)


def warm_knowledge_base(spec: ScenarioSpec, graphs: Mapping[str, NetworkGraph], verbose: bool = False) -> KnowledgeBase:
    """Run LiSFC on the warm-up graph for each warm seed, archiving into one task record."""
    cfg = spec.planner("lisfc")
    kb = KnowledgeBase(cfg.transfer)
    g = graphs[spec.warm_graph]
    wl = replace(spec.workload, load_factor=spec.loads[0])
    for seed in spec.warm_seeds:
        kb.begin_task(g)
        planner = make_planner(cfg, spec.env, kb)
        rec = run_episode(g, wl, planner, spec.env, seed, scenario="warmup", task_id=spec.warm_graph)
        _log(f"warm seed={seed} blocking={rec.blocking:.4f} sims={rec.mean_sims:.1f} "
             f"archive={len(kb.task(spec.warm_graph).archive) if kb.task(spec.warm_graph) else 0}", verbose)
    return kb


def _transfer_runs(spec: ScenarioSpec, verbose: bool) -> ScenarioResult:
    graphs = spec.graph.family()
    kb = warm_knowledge_base(spec, graphs, verbose) if "lisfc" in spec.planners else None
    base = graphs[spec.warm_graph]
    wl = replace(spec.workload, load_factor=spec.loads[0])
    weights = spec.planner("lisfc").transfer.weights
    records = []
    for gname in spec.graphs:
        g = graphs[gname]
        dg = float(graph_drift(base, g, weights).delta_g)
        for name in spec.planners:
            for seed in spec.seeds:
                local = None
                if name == "lisfc":
                    # each run sees the warm KB only, never another run's archive
                    local = kb.copy()
                    local.begin_task(g)
                planner = make_planner(spec.planner(name), spec.env, local)
                rec = run_episode(g, wl, planner, spec.env, seed, scenario=spec.scenario, task_id=f"{gname}.{seed}")
                records.append((rec, dg))
                _log(f"{gname} dG={dg:.4f} {name} seed={seed} blocking={rec.blocking:.4f} sims={rec.mean_sims:.1f}", verbose)
    return ScenarioResult(spec, records, kb)


def scenario_drift_transfer(spec: ScenarioSpec, verbose: bool = False) -> ScenarioResult:
    """Sims per decision and blocking of umcts and lisfc on each G_k after warming on G0."""
    return _transfer_runs(spec, verbose)


def scenario_convergence(spec: ScenarioSpec, verbose: bool = False) -> ScenarioResult:
    """Running blocking curves per (planner, G_k, seed) after warming on G0."""
    return _transfer_runs(spec, verbose)


def run_scenario(spec: ScenarioSpec, out: str | Path | None = None, verbose: bool = False) -> ScenarioResult:
    fn = {"load_sweep": scenario_load_sweep, "drift_transfer": scenario_drift_transfer,
          "convergence": scenario_convergence}[spec.scenario]
    res = fn(spec, verbose)
    target = out if out is not None else spec.out
    if target is not None:
        res.write(target)
    return res
