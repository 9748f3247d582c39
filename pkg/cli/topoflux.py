#!/usr/bin/env python3
"""Command-line interface for topoflux.

SUBCOMMANDS:
  persist      Persistence diagrams of a point cloud (JSON + diagram SVG)
  optimize     Optimize a point cloud for a topological loss alone
               (trace CSV, final points CSV, before/after scatter SVGs)
  embed        Topologically regularized embedding from an experiment config
               (embedding CSV, trace CSV, scatter SVG, summary JSON)
  pseudotime   Circular pseudotime of a 2D embedding (CSV + colored scatter SVG)
  bench        Runtime of circle-loss optimization against the number of points

COMMON OPTIONS:
  --seed INTEGER               Top-level seed; every random stream derives from it
  --out PATH                   Output directory (default: results)
  --verbose, -v / --quiet, -q  More or less logging

EXIT CODES:
  0 success, 2 usage error, 1 any other error (message on stderr, prefixed ERROR:)

ENVIRONMENT VARIABLES:
  TOPOFLUX_THREADS             Worker cap for sampled losses and sweeps
  TOPOFLUX_MAX_SIMPLICES       Vietoris-Rips simplex budget
  TOPOFLUX_LOG_LEVEL           Default log level
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from utils.config import get_settings
from utils.datasets import (
    generate,
    generate_noisy_circle,
    load_experiment_config,
    load_input,
    load_loss_spec,
    load_point_csv,
    resolve_loss,
    save_points_csv,
)
from utils.embedders import FreeCoordinates, GraphData, make_objective
from utils.exceptions import TopofluxError, UsageError
from utils.models import FiltrationSpec, GeneratorKind, GeneratorSpec, RunConfig, RunMode, TopoLossSpec
from utils.optimizer import compare_modes, run
from utils.plotting import plot_diagram, plot_embedding, plot_runtime, plot_trace
from utils.pseudotime import extract_cycle_model, infer_pseudotime
from utils.topology.persistence import diagrams_from_cloud

logger = logging.getLogger(__name__)

VERSION = "topoflux 1.0.0"


class _ArgumentParser(argparse.ArgumentParser):
    """Raise instead of exiting so run_cli can map parse errors to exit code 2."""

    def error(self, message):
        raise UsageError(message)


def _filtration(value: Optional[str], max_dim: int) -> Optional[FiltrationSpec]:
    if value is None:
        return None
    if value == "rips":
        return FiltrationSpec(kind="rips", max_dim=max_dim)
    return FiltrationSpec(kind=value)


def _load_cloud(args) -> np.ndarray:
    if args.input is not None:
        return load_point_csv(args.input, center=getattr(args, "center", False))
    if args.generator is not None:
        data = generate(GeneratorSpec(kind=args.generator, params={"seed": _seed(args), **_params(args)}))
        if isinstance(data, GraphData):
            raise UsageError(f"Generator '{args.generator}' produces a graph, not a point cloud")
        return data
    raise UsageError("Give --input or --generator")


def _params(args) -> dict:
    params = {}
    key = "n_per_branch" if args.generator == GeneratorKind.BIFURCATION.value else "n"
    if getattr(args, "n", None) is not None:
        params[key] = args.n
    elif args.generator == GeneratorKind.GAUSSIAN.value:
        params[key] = 100
    return params


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _output_dir(args) -> Path:
    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_persist(args) -> int:
    cloud = _load_cloud(args)
    spec = _filtration(args.filtration or "weak-alpha", args.max_dim)
    result = diagrams_from_cloud(cloud, spec)
    payload = {
        "filtration": spec.to_json_value(),
        "n_points": int(len(cloud)),
        "diagrams": [diagram.to_dict() for diagram in result.diagrams],
    }
    out = _output_dir(args)
    (out / "diagrams.json").write_text(json.dumps(payload, indent=2))
    plot_diagram(result.diagrams, out / "diagram.svg")
    print(json.dumps(payload, indent=2))
    return 0


def _run_config(args, base: Optional[RunConfig] = None, **overrides) -> RunConfig:
    values = (base or RunConfig()).model_dump()
    # bench has no --lambda-top or --epochs
    for option, key in (("seed", "seed"), ("lambda_top", "lambda_top"), ("lr", "learning_rate"), ("epochs", "max_epochs")):
        value = getattr(args, option, None)
        if value is not None:
            values[key] = value
    values.update(overrides)
    return RunConfig.model_validate(values)


def _with_filtration(spec: TopoLossSpec, args) -> TopoLossSpec:
    filtration = _filtration(args.filtration, args.max_dim)
    if filtration is None:
        return spec
    return TopoLossSpec(filtration=filtration, terms=spec.terms)


def cmd_optimize(args) -> int:
    cloud = _load_cloud(args)
    spec = load_loss_spec(args.spec) if args.spec else TopoLossSpec.circle()
    spec = _with_filtration(spec, args)
    config = _run_config(args, mode=RunMode.TOPOLOGICAL_ONLY)
    if not args.quiet:
        print(f"Optimizing {len(cloud)} points for {config.max_epochs} epochs...")
    trace = run(FreeCoordinates(cloud), spec, config)
    trace.raise_for_failure()

    out = _output_dir(args)
    trace.to_csv(out / "trace.csv")
    save_points_csv(out / "points.csv", trace.state.coordinates)
    plot_embedding(cloud, out / "before.svg", title="Before")
    plot_embedding(trace.state.coordinates, out / "after.svg", title="After")
    plot_trace(trace.to_frame(), out / "trace.svg")
    print(json.dumps(trace.summary(), indent=2))
    return 0


def cmd_embed(args) -> int:
    experiment = load_experiment_config(args.config)
    data = load_input(experiment)
    spec = resolve_loss(experiment)
    if spec is not None:
        spec = _with_filtration(spec, args)
    config = _run_config(args, experiment.run)
    objective = make_objective(
        experiment.embedder, data, experiment.dimension, experiment.neighbors, experiment.walks, init=experiment.init
    )
    out = Path(args.out or experiment.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = data.labels if isinstance(data, GraphData) else None

    if args.compare:
        if spec is None:
            raise UsageError("--compare needs a topological loss")
        comparison = compare_modes(objective, spec, config)
        comparison.losses.to_csv(out / "comparison.csv", index_label="mode", float_format="%.17g")
        for name, trace in comparison.runs.items():
            trace.raise_for_failure()
            save_points_csv(out / f"embedding_{name}.csv", trace.state.coordinates)
            trace.to_csv(out / f"trace_{name}.csv")
            plot_embedding(trace.state.coordinates, out / f"embedding_{name}.svg", colors=labels, title=name.capitalize())
        print(comparison.losses.to_string())
        print(f"Regularized losses balance ordinary and optimized: {comparison.balances()}")
        return 0

    trace = run(objective, spec, config)
    trace.raise_for_failure()
    save_points_csv(out / "embedding.csv", trace.state.coordinates)
    trace.to_csv(out / "trace.csv")
    plot_embedding(trace.state.coordinates, out / "embedding.svg", colors=labels)
    plot_trace(trace.to_frame(), out / "trace.svg")
    summary = trace.summary()
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))
    return 0


def cmd_pseudotime(args) -> int:
    if args.input is not None:
        E = load_point_csv(args.input)
    else:
        E = generate_noisy_circle(n=args.n or 60, seed=_seed(args)).points
    model = extract_cycle_model(E)
    table = infer_pseudotime(E, model)
    out = _output_dir(args)
    table.to_csv(out / "pseudotime.csv", index=False, float_format="%.17g")
    plot_embedding(
        E, out / "pseudotime.svg", colors=table["pseudotime"].to_numpy(), cycle=model.edges(), title="Pseudotime", cmap="twilight"
    )
    if not args.quiet:
        print(f"Cycle through {model.n_edges} points, length {model.total_length:.6g}")
    print(table.to_string(index=False))
    return 0


def cmd_bench(args) -> int:
    try:
        sizes = [int(size) for size in args.sizes.split(",") if size.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be a comma-separated list of integers, got {args.sizes!r}")
    if not sizes or min(sizes) < 3:
        raise UsageError("--sizes needs at least one size of 3 or more")
    spec = TopoLossSpec.circle()
    config = _run_config(args, mode=RunMode.TOPOLOGICAL_ONLY, max_epochs=args.iterations, learning_rate=args.lr or 0.01)
    rows = []
    for n in sizes:
        cloud = generate_noisy_circle(n=n, sigma=0.1, seed=_seed(args)).points
        started = time.perf_counter()
        trace = run(FreeCoordinates(cloud), spec, config)
        seconds = time.perf_counter() - started
        trace.raise_for_failure()
        rows.append({"n": n, "iterations": trace.epochs, "seconds": seconds})
        if not args.quiet:
            print(f"n={n}: {seconds:.3f} s")
    frame = pd.DataFrame(rows)
    out = _output_dir(args)
    frame.to_csv(out / "bench.csv", index=False)
    plot_runtime(frame, out / "runtime.svg")
    if len(frame) > 1:
        slope = np.polyfit(np.log(frame["n"]), np.log(frame["seconds"]), 1)[0]
        print(f"log-log slope: {slope:.3f}")
    print(frame.to_string(index=False))
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="Top-level seed (default: 0, or the config's seed for embed)")
    parser.add_argument("--out", help="Output directory (default: results, or the config's output_dir for embed)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log progress")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only print results")


def _add_cloud_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", help="Point cloud CSV")
    parser.add_argument("--generator", choices=[k.value for k in GeneratorKind if not k.is_graph], help="Built-in generator")
    parser.add_argument("--n", type=int, help="Number of generated points")


def _add_filtration(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--filtration", choices=["weak-alpha", "rips"], help="Filtration type")
    parser.add_argument("--max-dim", type=int, default=1, help="Highest homology dimension for rips (default: 1)")


def _add_run(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda-top", type=float, help="Weight of the topological loss")
    parser.add_argument("--lr", type=float, help="Learning rate")
    parser.add_argument("--epochs", type=int, help="Maximum number of epochs")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="topoflux",
        description="Persistent homology and topologically regularized embeddings",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  topoflux persist --input cutlery/samples/square.csv --filtration weak-alpha
  topoflux optimize --generator gaussian --n 200 --spec cutlery/samples/circle_loss.json --epochs 500
  topoflux embed --config cutlery/samples/synth_cycle.json --compare
  topoflux pseudotime --generator noisy-circle --n 60
  topoflux bench --sizes 100,1000 --iterations 100
        """,
    )
    parser.add_argument("--version", action="version", version=VERSION)
    subparsers = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)

    persist = subparsers.add_parser("persist", help="Compute persistence diagrams")
    _add_cloud_input(persist)
    _add_filtration(persist)
    _add_common(persist)

    optimize = subparsers.add_parser("optimize", help="Topological-only optimization of a point cloud")
    _add_cloud_input(optimize)
    optimize.add_argument("--spec", help="Loss specification JSON (default: the circle prior)")
    _add_filtration(optimize)
    _add_run(optimize)
    _add_common(optimize)

    embed = subparsers.add_parser("embed", help="Regularized embedding from an experiment config")
    embed.add_argument("--config", "-c", required=True, help="Experiment configuration JSON")
    embed.add_argument("--compare", action="store_true", help="Also run ordinary and optimized embeddings")
    _add_filtration(embed)
    _add_run(embed)
    _add_common(embed)

    pseudotime = subparsers.add_parser("pseudotime", help="Circular pseudotime of a 2D embedding")
    pseudotime.add_argument("--input", "-i", help="2D embedding CSV (default: a generated noisy circle)")
    pseudotime.add_argument("--n", type=int, help="Number of generated points")
    _add_common(pseudotime)

    bench = subparsers.add_parser("bench", help="Runtime against the number of points")
    bench.add_argument("--sizes", default="100,1000", help="Comma-separated sizes (default: 100,1000)")
    bench.add_argument("--iterations", type=int, default=100, help="Epochs per size (default: 100)")
    bench.add_argument("--lr", type=float, help="Learning rate")
    _add_common(bench)
    return parser


COMMANDS = {
    "persist": cmd_persist,
    "optimize": cmd_optimize,
    "embed": cmd_embed,
    "pseudotime": cmd_pseudotime,
    "bench": cmd_bench,
}


def _configure_logging(args) -> None:
    level = get_settings().log_level
    if getattr(args, "verbose", False):
        level = "INFO"
    if getattr(args, "quiet", False):
        level = "ERROR"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("Please specify a subcommand: " + ", ".join(COMMANDS))
        _configure_logging(args)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 2
    except (TopofluxError, ValidationError, OSError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 1


def main():
    """Console entry point."""
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
