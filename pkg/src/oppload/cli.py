"""Command-line experiment runner.

Subcommands: ``generate`` (synthetic network file), ``fit`` (trace to
network file), ``estimate`` (direct vs cooperative delivery estimates),
``plan`` (offload plan JSON), ``simulate`` (strategy comparison CSVs) and
``validate`` (estimator vs Monte Carlo CSV).  Every subcommand is
deterministic given its arguments including the seed; errors print a
machine-readable ``error[CODE]`` line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .contacts import PairContactParams
from .delivery import DeliveryQuery, PathSpec, delivery_prob_onehop, delivery_prob_path
from .errors import ConfigError, OppLoadError
from .heuristic import plan_offload, plan_to_json
from .netgraph import (
    Network,
    SyntheticConfig,
    generate_synthetic,
    ingest_trace,
    load_network,
    read_trace_csv,
    save_network,
    write_trace_csv,
)
from .simulator import (
    STRATEGIES,
    TransmissionTask,
    run_monte_carlo_delivery,
    simulate_strategy,
    write_results_csv,
    write_summary_csv,
)


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _synthetic_config(payload: dict, seed: int | None) -> SyntheticConfig:
    known = {
        "n",
        "avg_degree",
        "max_degree",
        "weight_exponent",
        "node_alpha_range",
        "node_beta_range",
        "infra_alpha_range",
        "infra_beta_range",
        "infra_lambda_range",
        "rate",
        "seed",
        "weight_scale",
    }
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown synthetic config keys: {sorted(unknown)}")
    kwargs = dict(payload)
    for key, value in kwargs.items():
        if key.endswith("_range"):
            kwargs[key] = tuple(value)
    if seed is not None:
        kwargs["seed"] = seed
    return SyntheticConfig(**kwargs)


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _synthetic_config(_load_json(args.config), args.seed)
    save_network(generate_synthetic(config), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    records = read_trace_csv(args.trace)
    network, evaluation = ingest_trace(
        records, args.warmup, args.rate, min_contacts=args.min_contacts
    )
    save_network(network, args.out)
    if args.eval_out:
        write_trace_csv(evaluation, args.eval_out)
    print(f"wrote {args.out} ({network.node_count} nodes, {len(network.edges)} edges)")
    return 0


def _resolve_node(network: Network, node: int) -> int:
    if not (0 <= node < network.node_count):
        raise ConfigError(f"unknown node {node}; network has nodes 0..{network.node_count - 1}")
    return node


def _cmd_estimate(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    source = _resolve_node(network, args.source)
    plan = plan_offload(network, source, args.size, args.deadline)
    direct = network.edge_params(source, network.infrastructure_id)
    individual = 0.0
    if direct is not None:
        individual = delivery_prob_onehop(
            direct, DeliveryQuery(data_size=args.size, deadline=args.deadline)
        )
    cooperative = max(plan.joint_probability, individual)
    print(f"individual {individual:.6f}")
    print(f"cooperative {cooperative:.6f}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(plan_to_json(plan), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    network = load_network(args.network)
    source = _resolve_node(network, args.source)
    plan = plan_offload(network, source, args.size, args.deadline)
    payload = json.dumps(plan_to_json(plan), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(payload)
    return 0


def _load_simulation_network(config: dict, seed: int | None) -> Network:
    source = config.get("network")
    if not isinstance(source, dict):
        raise ConfigError("config needs a 'network' object")
    if "file" in source:
        return load_network(source["file"])
    if "synthetic" in source:
        return generate_synthetic(_synthetic_config(source["synthetic"], None))
    if "trace" in source:
        trace = source["trace"]
        records = read_trace_csv(trace["file"])
        network, _ = ingest_trace(
            records,
            trace.get("warmup", 0.5),
            trace["rate"],
            min_contacts=trace.get("min_contacts", 5),
        )
        return network
    raise ConfigError("network source must be one of: file, synthetic, trace")


def _build_tasks(
    network: Network, sizes: list[float], deadlines: list[float], runs: int, seed: int
) -> list[TransmissionTask]:
    if not sizes or not deadlines:
        raise ConfigError("task grid needs at least one size and one deadline")
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    rng = np.random.default_rng(seed)
    mobile = network.mobile_nodes()
    tasks = []
    task_id = 0
    for _ in range(runs):
        for size in sizes:
            for deadline in deadlines:
                source = int(mobile[rng.integers(len(mobile))])
                release = float(np.round(rng.uniform(0.0, 1000.0), 3))
                tasks.append(
                    TransmissionTask(
                        task_id=task_id,
                        source=source,
                        size=size,
                        deadline=deadline,
                        release=release,
                    )
                )
                task_id += 1
    return tasks


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_json(args.config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    runs = args.runs if args.runs is not None else int(config.get("runs", 1))
    strategies = config.get("strategies", list(STRATEGIES))
    if strategies == "all":
        strategies = list(STRATEGIES)
    network = _load_simulation_network(config, seed)
    tasks = _build_tasks(
        network,
        [float(s) for s in config.get("sizes", [])],
        [float(d) for d in config.get("deadlines", [])],
        runs,
        seed,
    )
    results = [simulate_strategy(network, tasks, strategy, seed) for strategy in strategies]
    results_path = args.results or config.get("results_csv", "results.csv")
    summary_path = args.out or config.get("summary_csv", "summary.csv")
    write_results_csv(results, results_path)
    write_summary_csv(results, summary_path)
    print(f"wrote {results_path} and {summary_path}")
    return 0


def _path_spec_from_json(payload: dict) -> PathSpec:
    hops = tuple(
        PairContactParams(
            contact_rate=float(h["lambda"]),
            alpha=float(h["alpha"]),
            beta=float(h["beta"]),
            rate=float(h["rate"]),
        )
        for h in payload["hops"]
    )
    return PathSpec(hops)


def _cmd_validate(args: argparse.Namespace) -> int:
    if args.runs < 1000:
        raise ConfigError("validation needs at least 1000 Monte Carlo runs")
    if args.path_spec:
        spec = _path_spec_from_json(_load_json(args.path_spec))
    elif args.network and args.route:
        network = load_network(args.network)
        route = [int(part) for part in args.route.split(",")]
        hops = []
        for a, b in zip(route, route[1:]):
            params = network.edge_params(a, b)
            if params is None:
                raise ConfigError(f"route uses missing edge {(a, b)}")
            hops.append(params)
        spec = PathSpec(tuple(hops))
    else:
        raise ConfigError("validate needs --path-spec or both --network and --route")

    sizes = [float(s) for s in args.sizes.split(",")]
    deadlines = [float(d) for d in args.deadlines.split(",")]
    rows = []
    for size in sizes:
        for deadline in deadlines:
            if deadline <= 0:
                estimated = simulated = 0.0
            else:
                estimated = delivery_prob_path(spec, DeliveryQuery(size, deadline))
                simulated = run_monte_carlo_delivery(spec, size, deadline, args.runs, args.seed)
            rows.append((size, deadline, estimated, simulated, abs(estimated - simulated)))
    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["size", "deadline", "estimated", "simulated", "abs_error"])
        for size, deadline, estimated, simulated, delta in rows:
            writer.writerow([repr(size), repr(deadline), repr(estimated), repr(simulated), repr(delta)])
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oppload",
        description="Cooperative data offloading over opportunistic networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic network file")
    p.add_argument("--config", required=True, help="synthetic config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True, help="output network JSON path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("fit", help="fit a network from a contact trace CSV")
    p.add_argument("--trace", required=True, help="trace CSV (node_a,node_b,t_start,t_end)")
    p.add_argument("--rate", type=float, required=True, help="data rate, units per second")
    p.add_argument("--warmup", type=float, default=0.5, help="warmup fraction in (0,1)")
    p.add_argument("--min-contacts", type=int, default=5, help="min warmup contacts per pair")
    p.add_argument("--out", required=True, help="output network JSON path")
    p.add_argument("--eval-out", default=None, help="optional path for the evaluation half")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("estimate", help="print direct and cooperative delivery estimates")
    p.add_argument("--network", required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--size", type=float, required=True)
    p.add_argument("--deadline", type=float, required=True)
    p.add_argument("--out", default=None, help="optional plan JSON path")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("plan", help="write the offload plan as JSON")
    p.add_argument("--network", required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--size", type=float, required=True)
    p.add_argument("--deadline", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("simulate", help="run strategy comparisons, write CSVs")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--results", default=None, help="per-task results CSV path")
    p.add_argument("--out", default=None, help="summary CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate", help="estimator vs Monte Carlo over a grid")
    p.add_argument("--path-spec", default=None, help="path spec JSON with a 'hops' list")
    p.add_argument("--network", default=None)
    p.add_argument("--route", default=None, help="comma-separated node ids")
    p.add_argument("--sizes", required=True, help="comma-separated data sizes")
    p.add_argument("--deadlines", required=True, help="comma-separated deadlines")
    p.add_argument("--runs", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OppLoadError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error[VALIDATION]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[IO]: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
