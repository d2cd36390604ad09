"""Command-line front door: ``plug``, ``plan``, ``play``, ``report``, ``cost``.

Files hold machine output; progress and notes go to stderr.  Exit codes:
0 success, 2 configuration/validation error, 3 some runs failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from papb.cluster import ClusterDescriptor, detect_environment, load_descriptor, workload_node_count
from papb.cost import CostModel, format_cost, compute_cost, load_cost_model, price_plan
from papb.errors import PapbError
from papb.harness import ShellExecutor, SimulatedClock, SimulatedExecutor, WallClock, aggregate_results, load_scenario, run_plan
from papb.recipe import NodeKind, deployment_profile, emit_recipe_text, execute_recipe, render_recipe, write_recipe
from papb.report import BenchmarkReport, ReportMetadata, emit_plot_data, emit_results, parse_results
from papb.workloads import configure_workload, full_plan, interactive_plan, load_plan, plan_to_json

log = logging.getLogger("papb")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3
BUILTIN = "builtin:"


class UsageError(PapbError):
    pass


@dataclass(frozen=True)
class CliConfig:
    descriptor_path: Path | None
    scenario_path: Path | None
    command_template: str | None
    plan_path: Path | None
    run_all: bool
    interactive: bool
    output_dir: Path
    cost_model_path: Path | None
    seed: int | None

    def __post_init__(self):
        if self.scenario_path is not None and self.command_template is not None:
            raise UsageError("give either --scenario or --command, not both")


def resolve_data_path(value) -> Path:
    """Map ``builtin:<name>`` to a file shipped with the package."""
    value = str(value)
    if not value.startswith(BUILTIN):
        return Path(value)
    name = value[len(BUILTIN):]
    data = resources.files("papb") / "data"
    for candidate in (f"{name}", f"{name}.json", f"clusters/{name}", f"clusters/{name}.json"):
        path = data / candidate
        if path.is_file():
            return Path(str(path))
    raise UsageError(f"no builtin data file named {name!r}")


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("PAPB_OUT") or "papb-out")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- commands -----------------------------------------------------------------

def cmd_plug(args) -> int:
    desc = load_descriptor(resolve_data_path(args.cluster))
    profile = detect_environment(desc)
    kind = NodeKind(args.node_kind)
    recipe = render_recipe(profile, kind, args.source_node, source_user=args.source_user)
    out = _out_dir(args)
    dockerfile, run_sh = write_recipe(emit_recipe_text(recipe), out)
    prof = deployment_profile(kind)
    _note(f"wrote {dockerfile} and {run_sh}")
    _note(f"note: {kind.value} node images measured {prof.image_size}, "
          f"deployed in {prof.deploy_time} on the reference cluster")
    if args.execute:
        return execute_recipe(out)
    return EXIT_OK


def _resolve_plan(args):
    chosen = [bool(args.plan), args.all, args.interactive]
    if sum(chosen) != 1:
        raise UsageError("choose exactly one of --plan, --all, --interactive")
    if args.all:
        return full_plan()
    if args.interactive:
        return interactive_plan(stdin=sys.stdin, stderr=sys.stderr)
    return load_plan(resolve_data_path(args.plan))


def cmd_plan(args) -> int:
    plan = full_plan() if args.all else interactive_plan(stdin=sys.stdin, stderr=sys.stderr)
    out = _out_dir(args)
    conf_dir = out / "conf"
    conf_dir.mkdir(parents=True, exist_ok=True)
    plan_path = out / "plan.json"
    plan_path.write_text(plan_to_json(plan))
    for spec, overrides in plan:
        (conf_dir / f"{spec.id}.conf").write_text(configure_workload(spec, overrides).text())
    _note(f"wrote {plan_path} with {len(plan)} workload(s)")
    return EXIT_OK


def cmd_play(args) -> int:
    config = CliConfig(
        descriptor_path=resolve_data_path(args.cluster) if args.cluster else None,
        scenario_path=resolve_data_path(args.scenario) if args.scenario else None,
        command_template=args.command,
        plan_path=Path(args.plan) if args.plan else None,
        run_all=args.all,
        interactive=args.interactive,
        output_dir=_out_dir(args),
        cost_model_path=None,
        seed=args.seed,
    )
    if config.scenario_path is None and config.command_template is None:
        raise UsageError("play needs --scenario (simulated) or --command (real cluster)")

    desc = load_descriptor(config.descriptor_path) if config.descriptor_path else None
    if desc is not None:
        node_count = workload_node_count(desc)
        if args.nodes is not None and args.nodes != node_count:
            raise UsageError(f"--nodes {args.nodes} disagrees with cluster {desc.name!r} "
                             f"({node_count} billed nodes)")
    elif args.nodes is not None:
        node_count = args.nodes
    else:
        raise UsageError("play needs --cluster or --nodes")
    if node_count < 1:
        raise UsageError("--nodes must be >= 1")

    plan = _resolve_plan(args)
    if config.scenario_path is not None:
        scenario = load_scenario(config.scenario_path).with_overrides(
            seed=config.seed, noise_fraction=args.noise)
        scenario.check_plan(plan, node_count)
        executor, clock = SimulatedExecutor(scenario), SimulatedClock()
        meta_extra = dict(scenario=scenario.name, seed=scenario.seed,
                          noise_fraction=scenario.noise_fraction, executor="simulated")
    else:
        executor, clock = ShellExecutor(config.command_template), WallClock()
        meta_extra = dict(executor="shell")

    started = clock.now()
    runs = run_plan(plan, executor, node_count, clock=clock)
    aggregates, failures = aggregate_results(runs)
    metadata = ReportMetadata(
        cluster_id=desc.name if desc else f"adhoc-{node_count}",
        region=desc.region if desc else "",
        currency=desc.currency if desc else "GBP",
        node_count=node_count,
        timestamp=started,
        cluster=desc.to_dict() if desc else None,
        **meta_extra,
    )
    report = BenchmarkReport(metadata, tuple(runs), tuple(aggregates))
    path = emit_results(report, config.output_dir / (args.output or f"results-n{node_count}.jsonl"))
    _note(f"wrote {path}: {len(runs)} runs, {len(aggregates)} aggregates")
    if failures:
        _note(f"{sum(failures.values())} run(s) failed: "
              + ", ".join(f"{w} x{c}" for w, c in sorted(failures.items())))
        return EXIT_PARTIAL
    return EXIT_OK


def _descriptor_for(report: BenchmarkReport, explicit: list[ClusterDescriptor], source) -> ClusterDescriptor:
    n = report.metadata.node_count
    for desc in explicit:
        if workload_node_count(desc) == n:
            return desc
    if report.metadata.cluster is not None:
        return ClusterDescriptor.from_dict(report.metadata.cluster)
    raise UsageError(f"{source}: no cluster descriptor for {n} nodes; pass --cluster")


def cmd_report(args) -> int:
    model = (load_cost_model(resolve_data_path(args.cost_model)) if args.cost_model
             else CostModel.reference())
    explicit = [load_descriptor(resolve_data_path(p)) for p in args.cluster or []]
    out = _out_dir(args)
    priced = []
    for source in args.results:
        report = parse_results(source)
        desc = _descriptor_for(report, explicit, source)
        quotes, total = price_plan(report.aggregates, desc, model)
        report = report.priced(quotes)
        path = emit_results(report, out / f"priced-{Path(source).stem}.jsonl")
        _note(f"wrote {path}")
        print(f"{Path(source).name}\tn={report.metadata.node_count}\t"
              f"total={format_cost(total)} {model.currency}")
        priced.append(report)
    cost_csv, time_csv = emit_plot_data(priced, out)
    _note(f"wrote {cost_csv} and {time_csv}")
    return EXIT_OK


def cmd_cost(args) -> int:
    for name, value in (("cpm", args.cpm), ("t", args.t)):
        if not math.isfinite(value):
            raise UsageError(f"--{name} must be finite")
    if args.n < 1:
        raise UsageError("-n must be >= 1")
    if args.cpm <= 0:
        raise UsageError("--cpm must be > 0")
    if args.t < 0:
        raise UsageError("-t must be >= 0")
    print(format_cost(compute_cost(args.n, args.cpm, args.t)))
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="papb", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def out_flag(p):
        p.add_argument("--out", help="output directory (default: $PAPB_OUT or ./papb-out)")

    p = sub.add_parser("plug", help="render Dockerfile and run.sh for a node")
    p.add_argument("--cluster", required=True, help="cluster descriptor JSON (or builtin:<name>)")
    p.add_argument("--node-kind", required=True, choices=[k.value for k in NodeKind])
    p.add_argument("--source-node", help="cluster node to rsync binaries from (normal nodes)")
    p.add_argument("--source-user", default="root", help="ssh user on the source node")
    p.add_argument("--execute", action="store_true", help="run run.sh after writing it")
    out_flag(p)
    p.set_defaults(func=cmd_plug)

    p = sub.add_parser("plan", help="select workloads and write plan.json + configs")
    p.add_argument("--all", action="store_true", help="every catalog workload with defaults")
    out_flag(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("play", help="execute a plan and write a results file")
    p.add_argument("--cluster", help="cluster descriptor JSON (or builtin:<name>)")
    p.add_argument("--nodes", type=int, help="billed node count (default: from --cluster)")
    p.add_argument("--plan", help="plan JSON file")
    p.add_argument("--all", action="store_true", help="run the whole catalog")
    p.add_argument("--interactive", action="store_true", help="read answers from stdin")
    p.add_argument("--scenario", help="simulated scenario JSON (or builtin:scenario)")
    p.add_argument("--command", help="shell template for a real cluster, e.g. 'run.sh {workload_id} {conf}'")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--noise", type=float, help="override the scenario noise fraction")
    p.add_argument("--output", help="results file name inside --out")
    out_flag(p)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("report", help="price results and write report + plot tables")
    p.add_argument("results", nargs="+", help="results files from 'play'")
    p.add_argument("--cluster", action="append", help="descriptor(s) to price with; repeatable")
    p.add_argument("--cost-model", help="cost model JSON (default: 821 GBP/month DS14_V2)")
    out_flag(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("cost", help="evaluate the cost formula once")
    p.add_argument("-n", type=int, required=True, help="number of nodes")
    p.add_argument("--cpm", type=float, required=True, help="cost per VM per month")
    p.add_argument("-t", type=float, required=True, help="workload time in seconds")
    p.set_defaults(func=cmd_cost)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except PapbError as exc:
        print(f"papb {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
