"""
Experiment harness: replicas × strategies × checkpoints, then averaging.

ExperimentRunner resolves every source, fans (source, replica) tasks out to
worker processes and reduces the results in a fixed order, so identical
configs give byte-identical tables regardless of ``jobs``.
"""

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple
import logging

import numpy as np
from tqdm import tqdm

from .attacks import build_plan, execute
from .config import ExperimentConfig, SourceSpec, StrategySpec
from .defaults import load_defaults
from .errors import GeneratorError
from .generators import calibrate_p_triad, generate, with_seed
from .graph import Graph
from .ingest import extract_lcc, read_graph
from .metrics import ResilienceSeries, SeriesPoint

logger = logging.getLogger(__name__)

RAW_HEADER = ["source", "strategy", "replica", "frac_removed", "lcc_frac", "apl"]
AGGREGATE_HEADER = [
    "source",
    "strategy",
    "frac_removed",
    "lcc_frac_mean",
    "lcc_frac_std",
    "apl_mean",
    "apl_std",
    "apl_defined",
    "edge_frac_mean",
]

# Strategies compared by the spread summary: everything but targeted nodes
SPREAD_STRATEGIES = (
    "random-nodes",
    "almost-random-nodes",
    "targeted-edges",
    "random-edges",
    "almost-random-edges",
)


@dataclass(frozen=True)
class RunRecord:
    """One executed attack: a (source, strategy, replica) triple."""

    source: str
    strategy: str
    replica: int
    seed: int
    series: ResilienceSeries


@dataclass(frozen=True)
class AggregatePoint:
    fraction_removed: float
    lcc_mean: float
    lcc_std: float
    apl_mean: Optional[float]
    apl_std: Optional[float]
    apl_defined: int
    edge_mean: Optional[float] = None


@dataclass
class AggregateSeries:
    """Raw runs plus per-checkpoint mean/std for every (source, strategy)."""

    records: List[RunRecord] = field(default_factory=list)
    points: Dict[Tuple[str, str], List[AggregatePoint]] = field(
        default_factory=dict
    )
    networks_generated: int = 0
    calibrated: Dict[str, float] = field(default_factory=dict)
    breakdown_threshold: float = 0.10

    def keys(self) -> List[Tuple[str, str]]:
        return list(self.points)

    def series(self, source: str, strategy: str) -> List[AggregatePoint]:
        return self.points[(source, strategy)]

    def breakdowns(self) -> Dict[str, Dict[str, Optional[float]]]:
        """Breakdown fraction of each mean curve, by source then strategy."""
        result: Dict[str, Dict[str, Optional[float]]] = {}
        for (source, strategy), points in self.points.items():
            result.setdefault(source, {})[strategy] = percolation_breakdown(
                points, self.breakdown_threshold
            )
        return result

    def get_summary(self) -> Dict[str, Any]:
        """JSON-ready summary of the sweep."""
        sources = list(dict.fromkeys(source for source, _ in self.points))
        spreads = {}
        for source in sources:
            spread = strategy_spread(self, source, SPREAD_STRATEGIES)
            if spread is not None:
                spreads[source] = spread
        onsets: Dict[str, Dict[str, List[Optional[float]]]] = {}
        for record in self.records:
            onsets.setdefault(record.source, {}).setdefault(
                record.strategy, []
            ).append(record.series.fallback_onset)
        return {
            "networks_generated": self.networks_generated,
            "series_executed": len(self.records),
            "breakdown_threshold": self.breakdown_threshold,
            "calibrated_p_triad": dict(self.calibrated),
            "breakdown": self.breakdowns(),
            "strategy_spread": spreads,
            "fallback_onsets": onsets,
        }

    def print_report(self, stream: TextIO = sys.stdout) -> None:
        summary = self.get_summary()
        print("=" * 60, file=stream)
        print("RESILIENCE SWEEP", file=stream)
        print("=" * 60, file=stream)
        print(f"  Networks generated: {summary['networks_generated']}", file=stream)
        print(f"  Series executed:    {summary['series_executed']}", file=stream)
        print(
            f"\nBreakdown (LCC < {self.breakdown_threshold:g} of original):",
            file=stream,
        )
        for source, strategies in summary["breakdown"].items():
            for strategy, fraction in strategies.items():
                shown = "never" if fraction is None else f"{fraction:g}"
                print(f"  {source:<28} {strategy:<32} {shown}", file=stream)
        print("=" * 60, file=stream)


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    # identical replicas report their exact value and a zero deviation
    if all(v == values[0] for v in values):
        return float(values[0]), 0.0
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def aggregate_records(
    records: Sequence[RunRecord], threshold: float = 0.10
) -> AggregateSeries:
    """Average replicas checkpoint by checkpoint, preserving record order."""
    grouped: Dict[Tuple[str, str], List[ResilienceSeries]] = {}
    for record in records:
        grouped.setdefault((record.source, record.strategy), []).append(
            record.series
        )

    result = AggregateSeries(records=list(records), breakdown_threshold=threshold)
    for key, runs in grouped.items():
        lengths = {len(run.points) for run in runs}
        if len(lengths) != 1:
            raise ValueError(f"replicas of {key} have different checkpoint grids")
        points = []
        for column in zip(*(run.points for run in runs)):
            lcc_mean, lcc_std = _mean_std([p.lcc_fraction for p in column])
            apls = [p.apl for p in column if p.apl is not None]
            apl_mean, apl_std = _mean_std(apls) if apls else (None, None)
            edges = [p.edge_fraction for p in column if p.edge_fraction is not None]
            points.append(
                AggregatePoint(
                    fraction_removed=column[0].fraction_removed,
                    lcc_mean=lcc_mean,
                    lcc_std=lcc_std,
                    apl_mean=apl_mean,
                    apl_std=apl_std,
                    apl_defined=len(apls),
                    edge_mean=_mean_std(edges)[0] if edges else None,
                )
            )
        result.points[key] = points
    return result


def percolation_breakdown(series: Any, threshold: float = 0.10) -> Optional[float]:
    """
    Smallest checkpoint fraction whose LCC fraction is below ``threshold``.

    ``series`` may be a ResilienceSeries, a list of SeriesPoint or
    AggregatePoint, or plain (fraction, lcc_fraction) pairs.

    Returns:
        The fraction, or None when the curve never drops below threshold.
    """
    if isinstance(series, ResilienceSeries):
        series = series.points
    pairs = []
    for point in series:
        if isinstance(point, SeriesPoint):
            pairs.append((point.fraction_removed, point.lcc_fraction))
        elif isinstance(point, AggregatePoint):
            pairs.append((point.fraction_removed, point.lcc_mean))
        else:
            fraction, lcc = point[0], point[1]
            pairs.append((float(fraction), float(lcc)))
    if not pairs:
        raise ValueError("breakdown needs a non-empty series")
    for fraction, lcc in pairs:
        if lcc < threshold:
            return fraction
    return None


def strategy_spread(
    aggregate: AggregateSeries, source: str, strategies: Iterable[str]
) -> Optional[float]:
    """
    Largest gap between any two mean LCC curves of ``strategies`` on a source.

    Strategies absent from the aggregate are skipped; None when fewer than
    two are present.
    """
    curves = [
        [p.lcc_mean for p in aggregate.points[(source, s)]]
        for s in strategies
        if (source, s) in aggregate.points
    ]
    if len(curves) < 2:
        return None
    return max(max(column) - min(column) for column in zip(*curves))


@dataclass(frozen=True)
class _ReplicaTask:
    source: SourceSpec
    strategies: Tuple[StrategySpec, ...]
    replica: int
    seed: int
    checkpoints: Tuple[float, ...]
    apl_enabled: bool
    apl_sources: Optional[int]
    restrict_to_lcc: bool
    graph: Optional[Graph] = None


def _run_replica(task: _ReplicaTask) -> List[RunRecord]:
    """Worker body: one graph instance attacked by every strategy."""
    graph = task.graph
    if graph is None:
        spec = with_seed(task.source.generator, task.seed)
        try:
            graph = generate(spec)
        except GeneratorError as e:
            raise GeneratorError(f"source '{task.source.name}': {e}") from e
        if task.restrict_to_lcc:
            graph = extract_lcc(graph)

    records = []
    for strategy in task.strategies:
        plan = build_plan(
            graph,
            strategy.kind,
            seed=task.seed,
            recompute=strategy.recompute,
            eligibility=strategy.eligibility,
        )
        series = execute(
            graph,
            plan,
            task.checkpoints,
            apl=task.apl_enabled,
            apl_sources=task.apl_sources,
        )
        records.append(
            RunRecord(task.source.name, strategy.label, task.replica, task.seed, series)
        )
    logger.info(
        "Finished %s replica %d (%d strateg(ies))",
        task.source.name,
        task.replica,
        len(task.strategies),
    )
    return records


class ExperimentRunner:
    """
    Runs an ExperimentConfig end to end.

    File sources are read once and shared by every replica; generated
    sources are rebuilt per replica with seed base_seed + replica index.
    """

    def __init__(self, config: ExperimentConfig, show_progress: bool = False):
        self.config = config
        self.show_progress = show_progress
        self.calibrated: Dict[str, float] = {}

    def _calibrate(self, source: SourceSpec) -> SourceSpec:
        if source.target_clustering is None:
            return source
        spec = source.generator
        seeds = load_defaults()["generators"]["calibration"]["seeds"]
        p_triad = calibrate_p_triad(
            spec.n, spec.target_m, source.target_clustering, seeds=tuple(seeds)
        )
        self.calibrated[source.name] = p_triad
        return replace(source, generator=replace(spec, p_triad=p_triad))

    def resolve_sources(self) -> List[Tuple[SourceSpec, Optional[Graph]]]:
        """Load file sources and calibrate generated ones."""
        resolved = []
        for source in self.config.sources:
            if source.generated:
                resolved.append((self._calibrate(source), None))
            else:
                graph, _ = read_graph(source.path, source.format)
                resolved.append((source, graph))
        return resolved

    def tasks(self) -> List[_ReplicaTask]:
        config = self.config
        tasks = []
        for source, graph in self.resolve_sources():
            for replica in range(config.replicas):
                tasks.append(
                    _ReplicaTask(
                        source=source,
                        strategies=config.strategies,
                        replica=replica,
                        seed=config.base_seed + replica,
                        checkpoints=config.checkpoints,
                        apl_enabled=config.apl_enabled,
                        apl_sources=config.apl_sources,
                        restrict_to_lcc=config.restrict_to_lcc,
                        graph=graph,
                    )
                )
        return tasks

    def run(self) -> AggregateSeries:
        config = self.config
        tasks = self.tasks()
        records: List[RunRecord] = []
        with tqdm(
            total=len(tasks),
            desc="replicas",
            unit="replica",
            file=sys.stderr,
            disable=not self.show_progress,
        ) as progress:
            if config.jobs > 1 and len(tasks) > 1:
                with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                    # map yields in submission order
                    for batch in pool.map(_run_replica, tasks):
                        records.extend(batch)
                        progress.update(1)
            else:
                for task in tasks:
                    records.extend(_run_replica(task))
                    progress.update(1)

        strategy_order = {s.label: i for i, s in enumerate(config.strategies)}
        source_order = {s.name: i for i, s in enumerate(config.sources)}
        records.sort(
            key=lambda r: (
                source_order[r.source],
                strategy_order[r.strategy],
                r.replica,
            )
        )
        result = aggregate_records(records, config.breakdown_threshold)
        result.networks_generated = config.generated_networks
        result.calibrated = dict(self.calibrated)
        logger.info(
            "Sweep complete: %d series over %d source(s)",
            len(records),
            len(config.sources),
        )
        return result


def run(config: ExperimentConfig, show_progress: bool = False) -> AggregateSeries:
    """Execute a full sweep; deterministic given ``config``."""
    return ExperimentRunner(config, show_progress=show_progress).run()


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return format(value, ".6g")


def emit_raw_csv(aggregate: AggregateSeries, stream: TextIO) -> None:
    """One row per (source, strategy, replica, checkpoint)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RAW_HEADER)
    for record in aggregate.records:
        for point in record.series.points:
            writer.writerow(
                [
                    record.source,
                    record.strategy,
                    record.replica,
                    _fmt(point.fraction_removed),
                    _fmt(point.lcc_fraction),
                    _fmt(point.apl),
                ]
            )


def emit_aggregate_csv(aggregate: AggregateSeries, stream: TextIO) -> None:
    """Mean/std table, one row per (source, strategy, checkpoint)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(AGGREGATE_HEADER)
    for (source, strategy), points in aggregate.points.items():
        for point in points:
            writer.writerow(
                [
                    source,
                    strategy,
                    _fmt(point.fraction_removed),
                    _fmt(point.lcc_mean),
                    _fmt(point.lcc_std),
                    _fmt(point.apl_mean),
                    _fmt(point.apl_std),
                    point.apl_defined,
                    _fmt(point.edge_mean),
                ]
            )


def emit_csv(aggregate: AggregateSeries, stream: TextIO) -> None:
    """Raw table, a blank line, then the aggregate table."""
    emit_raw_csv(aggregate, stream)
    stream.write("\n")
    emit_aggregate_csv(aggregate, stream)


def write_summary(
    aggregate: AggregateSeries,
    stream: TextIO,
    config: Optional[ExperimentConfig] = None,
) -> None:
    summary = aggregate.get_summary()
    if config is not None:
        summary["config"] = config.as_dict()
    json.dump(summary, stream, indent=2, sort_keys=True)
    stream.write("\n")
