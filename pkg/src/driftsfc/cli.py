"""Command line entry point: run scenarios, compare graphs, estimate distances."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .distance import estimate_from_logs, record_trajectory
from .drift import CSV_HEADER, DriftWeights, graph_drift
from .harness import ConfigError, load_config, run_scenario, tomllib
from .network import load_graph, save_graph

_WEIGHT_KEYS = ("w_spec", "w_cap", "w_bw", "w_edit", "rho_spec", "rho_cap", "rho_bw", "rho_edit", "lipschitz_c")


def load_weights(path: str | Path) -> DriftWeights:
    """Weights from a TOML file, either top-level keys or a [weights] table."""
    data = tomllib.loads(Path(path).read_text())
    data = data.get("weights", data)
    unknown = set(data) - set(_WEIGHT_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown weight keys {', '.join(sorted(unknown))}")
    return DriftWeights(**data)


def cmd_run(args) -> int:
    spec = load_config(args.config)
    if args.seed_offset:
        spec = spec.with_seed_offset(args.seed_offset)
    res = run_scenario(spec, args.out, verbose=args.verbose)
    for r in res.summary_rows():
        print(f"{r['graph']} load={r['load']} {r['planner']}: blocking {r['blocking_mean']:.4f} "
              f"+/- {r['blocking_se']:.4f}, sims/decision {r['sims_mean']:.1f}, p95 {r['p95_mean']:.2f}")
    return 0


def cmd_drift(args) -> int:
    weights = load_weights(args.weights) if args.weights else DriftWeights()
    report = graph_drift(load_graph(args.g1), load_graph(args.g2), weights)
    if args.header:
        print(CSV_HEADER)
    print(report.csv_row())
    return 0


def cmd_estimate(args) -> int:
    print(repr(estimate_from_logs(args.trace_a, args.trace_b, args.kappa)))
    return 0


def cmd_graphs(args) -> int:
    spec = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, g in spec.graph.family().items():
        save_graph(g, out / f"{name}.json")
        print(out / f"{name}.json")
    return 0


def cmd_trace(args) -> int:
    spec = load_config(args.config)
    g = spec.graph.family()[args.graph]
    wl = replace(spec.workload, load_factor=args.load if args.load is not None else spec.loads[0])
    n = record_trajectory(g, wl, args.seed, args.out, reward=spec.env.reward, k_paths=spec.env.k_paths)
    print(f"{n} steps -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="driftsfc", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run one scenario from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed-offset", type=int, default=0)
    r.add_argument("-v", "--verbose", action="store_true", help="log each episode to stderr")
    r.set_defaults(fn=cmd_run)

    d = sub.add_parser("drift", help="graph drift between two graph files, as one CSV row")
    d.add_argument("g1")
    d.add_argument("g2")
    d.add_argument("--weights", help="TOML file with w_*, rho_* and lipschitz_c")
    d.add_argument("--header", action="store_true")
    d.set_defaults(fn=cmd_drift)

    e = sub.add_parser("estimate", help="estimated MDP distance from two trajectory logs")
    e.add_argument("trace_a")
    e.add_argument("trace_b")
    e.add_argument("--kappa", type=float, default=1.0)
    e.set_defaults(fn=cmd_estimate)

    g = sub.add_parser("graphs", help="write the G0..G3 family of a config as graph files")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_graphs)

    t = sub.add_parser("trace", help="log one NF-Heuristic episode for the estimate command")
    t.add_argument("--config", required=True)
    t.add_argument("--graph", default="G0")
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--load", type=float)
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, KeyError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"driftsfc {args.cmd}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
