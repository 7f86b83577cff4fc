"""Command-line entry point: ``graphbandit run | plot | graph-info``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .environments import GraphStats, exact_stats
from .errors import ConfigError, ProtocolViolation
from .graph import (
    MAX_EXACT_ALPHA_NODES,
    MAX_EXACT_DOMINATION_NODES,
    GraphError,
    Observability,
    classify,
    greedy_weak_dominating_set,
    independence_number_exact,
    read_graph_sequence,
    self_loop_set,
    weak_domination_number_exact,
)
from .harness import aggregate_quantiles, nearest_rank, run_experiment, summarize
from .output import Curve, emit_csv, emit_svg_plot, read_csv

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_PROTOCOL = 0, 1, 2, 3


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    changes = {}
    if args.reps is not None:
        changes["repetitions"] = args.reps
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["out_dir"] = args.out
    if changes:
        cfg = cfg.replace(**changes)
    exp = run_experiment(cfg)
    out = Path(cfg.out_dir)
    emit_csv(exp.traces, out / "traces.csv")
    summary = summarize(exp)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    rounds = np.arange(1, cfg.horizon + 1)
    levels = (0.5, 1.0 - cfg.delta)
    curves = [Curve(f"q={q:g}", rounds, aggregate_quantiles(exp.traces, q)) for q in levels]
    emit_svg_plot(curves, out / "regret.svg", title=f"{cfg.learner} on {cfg.graph}")
    print(f"wrote {out / 'traces.csv'}, {out / 'summary.json'}, {out / 'regret.svg'}")
    print(f"final regret quantiles: {summary['final_regret_quantiles']}")
    print(f"bound ratio ({summary['bound_kind']}): {summary['bound_ratio']:.4f}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    if not 0.0 < args.quantile < 1.0:
        raise ConfigError(f"--quantile must lie in (0, 1), got {args.quantile}")
    curves = []
    for path in args.inputs:
        runs = read_csv(path)
        if not runs.reps:
            raise ConfigError(f"{path} holds no data rows")
        values = nearest_rank(runs.cum_regret, args.quantile, axis=0)
        curves.append(Curve(Path(path).stem if len(args.inputs) == 1 else str(path),
                            np.arange(1, values.size + 1), values))
    emit_svg_plot(curves, args.out, loglog=args.loglog,
                  title=f"{args.quantile:g}-quantile of cumulative regret")
    print(f"wrote {args.out}")
    return EXIT_OK


def _describe(g) -> list[str]:
    kind = classify(g)
    k = g.num_nodes
    lines = [f"nodes: {k}", f"classification: {kind.name.lower()}",
             f"self-loops S: {sorted(self_loop_set(g))}"]
    if kind is Observability.UNOBSERVABLE:
        lines.append("greedy dominating set: n/a (unobservable)")
        if k <= MAX_EXACT_ALPHA_NODES:
            lines.append(f"alpha (exact): {independence_number_exact(g)}")
        return lines
    lines.append(f"greedy dominating set: {sorted(greedy_weak_dominating_set(g))}")
    stats: GraphStats = exact_stats(g)
    alpha = f"{stats.alpha} (exact)" if k <= MAX_EXACT_ALPHA_NODES else f"<= {stats.alpha}"
    if k <= MAX_EXACT_DOMINATION_NODES:
        d = f"{weak_domination_number_exact(g)} (exact)"
    else:
        d = f"<= {stats.d} (greedy)"
    lines += [f"alpha: {alpha}", f"d: {d}", f"alpha of self-loop subgraph: {stats.alpha_tilde}"]
    return lines


def _cmd_graph_info(args) -> int:
    try:
        graphs = read_graph_sequence(args.graph)
    except GraphError as exc:
        raise ConfigError(str(exc)) from None
    for i, g in enumerate(graphs):
        if len(graphs) > 1:
            print(f"[graph {i}]")
        print("\n".join(_describe(g)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphbandit",
                                     description="Bandits with time-varying feedback graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("--config", required=True, help="flat YAML config")
    run.add_argument("--out", help="output directory (overrides out_dir)")
    run.add_argument("--reps", type=int, help="number of repetitions")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    run.set_defaults(func=_cmd_run)

    plot = sub.add_parser("plot", help="plot quantile regret curves from trace CSVs")
    plot.add_argument("--in", dest="inputs", action="append", required=True,
                      help="trace CSV; repeat for several curves")
    plot.add_argument("--quantile", type=float, default=0.5)
    plot.add_argument("--out", required=True, help="SVG path")
    plot.add_argument("--loglog", action="store_true")
    plot.set_defaults(func=_cmd_plot)

    info = sub.add_parser("graph-info", help="describe the graphs in a file")
    info.add_argument("--graph", required=True,
                      help='file with one graph per line, e.g. "K=3; 0:0,1; 1:1; 2:0,2"')
    info.set_defaults(func=_cmd_graph_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolViolation as exc:
        print(f"protocol violation: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
