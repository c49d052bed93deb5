#!/usr/bin/env python3
"""
Command-line interface for netresilience.
"""

import argparse
import contextlib
import csv
import dataclasses
import json
import sys
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, TextIO
import logging

# Add parent directory to path if running as script
if __name__ == "__main__":
    sys.path.insert(0, str(Path(__file__).parent.parent))

from netresilience import __version__
from netresilience.core.attacks import (
    AttackKind,
    Eligibility,
    build_plan,
    execute,
    write_plan,
)
from netresilience.core.config import (
    StrategySpec,
    checkpoint_grid,
    default_checkpoints,
    load_config,
)
from netresilience.core.defaults import load_defaults
from netresilience.core.generators import (
    DEFAULT_BETA,
    DEFAULT_P_TRIAD,
    GeneratorSpec,
    Model,
    generate,
)
from netresilience.core.harness import (
    AggregateSeries,
    RunRecord,
    emit_aggregate_csv,
    emit_raw_csv,
    run,
    write_summary,
)
from netresilience.core.ingest import (
    FORMATS,
    WRITERS,
    compare_to_reference,
    read_graph,
    write_edge_list,
)
from netresilience.core.metrics import stats

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool):
    """Configure logging based on verbosity."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    """Open ``path`` for writing, or hand back stdout when it is None."""
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        yield f


def _format_value(value) -> str:
    if isinstance(value, float):
        return str(round(value, 6))
    return str(value)


def _parse_checkpoints(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"checkpoints must be comma-separated numbers, got {text!r}"
        ) from None


def cmd_generate(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(
        model=Model(args.model),
        n=args.nodes,
        target_m=args.edges,
        beta=args.beta,
        p_triad=args.p_triad,
        seed=args.seed,
    )
    graph = generate(spec)
    with _output(args.out) as stream:
        write_edge_list(graph, stream)
    logger.info(
        "Generated %s network: %d nodes, %d edges",
        spec.model.value,
        graph.n_active,
        graph.m_active,
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    graph, _ = read_graph(args.input, args.format)
    result = stats(graph)
    record = result.as_record()
    comparison = (
        compare_to_reference(args.reference, record) if args.reference else None
    )

    if args.histogram:
        with open(args.histogram, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["degree", "count"])
            for degree, count in sorted(result.degree_histogram.items()):
                writer.writerow([degree, count])

    if args.json:
        output = {"stats": record}
        if comparison is not None:
            output["reference"] = {"dataset": args.reference, "checks": comparison}
        print(json.dumps(output, indent=2))
        return 0

    for key, value in record.items():
        if value is not None:
            print(f"{key} {_format_value(value)}")
    if comparison is not None:
        print(f"\nReference comparison ({args.reference}):")
        for check in comparison:
            print(
                f"  {check['status'].upper():<4} {check['check']}: "
                f"expected {check['expected']}, observed "
                f"{_format_value(check['observed'])}"
            )
    return 0


def cmd_attack(args: argparse.Namespace) -> int:
    graph, _ = read_graph(args.input, args.format)
    if args.step is not None:
        checkpoints = checkpoint_grid(args.step)
    elif args.checkpoints is not None:
        checkpoints = args.checkpoints
    else:
        checkpoints = default_checkpoints()

    strategy = StrategySpec(
        kind=AttackKind(args.strategy),
        recompute=args.recompute,
        eligibility=(
            Eligibility.INITIAL if args.initial_eligibility else Eligibility.CURRENT
        ),
    )
    plan = build_plan(
        graph,
        strategy.kind,
        seed=args.seed,
        recompute=strategy.recompute,
        eligibility=strategy.eligibility,
    )
    if args.plan_out:
        with open(args.plan_out, "w", encoding="utf-8") as f:
            write_plan(plan, f)
    series = execute(graph, plan, checkpoints, apl=not args.no_apl)

    record = RunRecord(Path(args.input).stem, strategy.label, 0, args.seed, series)
    with _output(args.out) as stream:
        emit_raw_csv(AggregateSeries(records=[record]), stream)
        if series.fallback_onset is not None:
            stream.write(f"# fallback_onset={format(series.fallback_onset, '.6g')}\n")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.jobs is not None:
        config = dataclasses.replace(config, jobs=args.jobs)
    aggregate = run(config, show_progress=not args.quiet)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "raw.csv", "w", encoding="utf-8", newline="") as f:
        emit_raw_csv(aggregate, f)
    with open(out_dir / "aggregate.csv", "w", encoding="utf-8", newline="") as f:
        emit_aggregate_csv(aggregate, f)
    with open(out_dir / "summary.json", "w", encoding="utf-8") as f:
        write_summary(aggregate, f, config)
    logger.info("Wrote raw.csv, aggregate.csv and summary.json to %s", out_dir)
    if not args.quiet:
        aggregate.print_report()
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    graph, labels = read_graph(args.input, args.format)
    with _output(args.out) as stream:
        WRITERS[args.to](graph, stream, labels)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "stats": cmd_stats,
    "attack": cmd_attack,
    "sweep": cmd_sweep,
    "convert": cmd_convert,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netresilience",
        description="Simulate attacks on complex networks and measure resilience",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate a scale-free network sized like the blog dataset
  netresilience generate --model scale-free --nodes 1222 --edges 16714 --seed 7

  # Degree, clustering and path-length statistics of a network file
  netresilience stats polblogs.gml --reference blog

  # Remove highest-degree nodes first and record the LCC every 10%
  netresilience attack epinions.txt --strategy targeted-nodes --seed 0

  # Full protocol: every source, strategy and replica
  netresilience sweep protocol.yaml --out-dir results --jobs 4

  # Re-encode a Pajek file as a canonical edge list
  netresilience convert authors.net --to edgelist

Attack strategies:
  targeted-nodes       - Highest degree first
  random-nodes         - Uniform random node removal
  almost-random-nodes  - Random among nodes of degree > 1
  targeted-edges       - Highest deg(u) + deg(v) first
  random-edges         - Uniform random edge removal
  almost-random-edges  - Random among edges joining two degree > 1 nodes
        """,
    )
    parser.add_argument(
        "--verbose",
        "-v",
        action="store_true",
        help="Show debug output including per-checkpoint measurements",
    )
    parser.add_argument(
        "--quiet", "-q", action="store_true", help="Suppress all output except errors"
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    gen = sub.add_parser("generate", help="Generate a synthetic network")
    gen.add_argument("--model", required=True, choices=[m.value for m in Model])
    gen.add_argument("--nodes", required=True, type=int, help="Node count n")
    gen.add_argument("--edges", required=True, type=int, help="Target edge count m")
    gen.add_argument(
        "--beta",
        type=float,
        default=DEFAULT_BETA,
        help=f"Rewiring probability for small-world (default: {DEFAULT_BETA})",
    )
    gen.add_argument(
        "--p-triad",
        type=float,
        default=DEFAULT_P_TRIAD,
        help=f"Triad-formation probability (default: {DEFAULT_P_TRIAD})",
    )
    gen.add_argument("--seed", required=True, type=int)
    gen.add_argument("--out", help="Output edge list (default: stdout)")

    st = sub.add_parser("stats", help="Print network statistics")
    st.add_argument("input", help="Network file")
    st.add_argument("--format", choices=FORMATS, help="Override format detection")
    st.add_argument(
        "--reference",
        choices=sorted(load_defaults()["datasets"]),
        help="Compare with a dataset's reference statistics",
    )
    st.add_argument("--histogram", metavar="PATH", help="Write degree,count CSV")
    st.add_argument("--json", action="store_true", help="Output in JSON format")

    att = sub.add_parser("attack", help="Run one attack strategy")
    att.add_argument("input", help="Network file")
    att.add_argument("--strategy", required=True, choices=[k.value for k in AttackKind])
    att.add_argument("--seed", required=True, type=int)
    grid = att.add_mutually_exclusive_group()
    grid.add_argument(
        "--checkpoints",
        type=_parse_checkpoints,
        metavar="LIST",
        help="Comma-separated removal fractions",
    )
    grid.add_argument("--step", type=float, help="Uniform checkpoint step")
    att.add_argument(
        "--recompute",
        action="store_true",
        help="Re-rank by current degree after each removal (targeted-nodes)",
    )
    att.add_argument(
        "--initial-eligibility",
        action="store_true",
        help="Almost-random eligibility from the original degrees",
    )
    att.add_argument("--no-apl", action="store_true", help="Skip path lengths")
    att.add_argument("--format", choices=FORMATS, help="Override format detection")
    att.add_argument("--out", help="Output CSV (default: stdout)")
    att.add_argument("--plan-out", metavar="PATH", help="Write the removal plan")

    sw = sub.add_parser("sweep", help="Run an experiment configuration")
    sw.add_argument("config", help="YAML or JSON experiment configuration")
    sw.add_argument("--out-dir", required=True, help="Directory for result files")
    sw.add_argument("--jobs", type=int, help="Worker processes (default: config)")

    conv = sub.add_parser("convert", help="Simplify a network and re-encode it")
    conv.add_argument("input", help="Network file")
    conv.add_argument("--to", required=True, choices=FORMATS)
    conv.add_argument("--format", choices=FORMATS, help="Override format detection")
    conv.add_argument("--out", help="Output file (default: stdout)")
    return parser


def main(argv: Optional[Sequence[str]] = None):
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logging
    if not args.quiet:
        setup_logging(args.verbose)
    else:
        logging.disable(logging.CRITICAL)

    try:
        sys.exit(COMMANDS[args.command](args))
    except FileNotFoundError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        sys.exit(130)
    except Exception as e:
        print(f"Unexpected error: {e}", file=sys.stderr)
        if args.verbose:
            import traceback

            traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
