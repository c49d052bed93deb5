"""
Tests for experiment configuration, the sweep runner and result tables.
"""

import csv
import io
import json
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

import netresilience
from netresilience.core.attacks import AttackKind, Eligibility, build_plan, execute
from netresilience.core.config import (
    StrategySpec,
    checkpoint_grid,
    config_from_mapping,
    default_checkpoints,
    load_config,
)
from netresilience.core.errors import ConfigError, GeneratorError
from netresilience.core.harness import (
    AggregateSeries,
    RunRecord,
    aggregate_records,
    emit_aggregate_csv,
    emit_csv,
    emit_raw_csv,
    percolation_breakdown,
    run,
    strategy_spread,
    write_summary,
)
from netresilience.core.ingest import read_graph
from netresilience.core.metrics import ResilienceSeries, SeriesPoint

from .conftest import DATA_DIR

pytestmark = [pytest.mark.harness]

PROTOCOL = Path(netresilience.__file__).parent / "config" / "protocol.yaml"
TWO_TRIANGLES = "1 2\n2 3\n3 1\n3 4\n4 5\n5 6\n6 4\n"


def _record(source, strategy, replica, points, onset=None):
    series = ResilienceSeries(
        AttackKind(strategy),
        [SeriesPoint(f, lcc, apl) for f, lcc, apl in points],
        onset,
    )
    return RunRecord(source, strategy, replica, replica, series)


@pytest.fixture
def small_config(write_file, tmp_path):
    """One file source and one generated source, three strategies."""

    def build(**overrides):
        write_file("net.txt", TWO_TRIANGLES)
        data = {
            "sources": [
                {"name": "file", "path": "net.txt"},
                {
                    "name": "er",
                    "generator": {"model": "random", "n": 40, "target_m": 80},
                },
            ],
            "strategies": ["targeted-nodes", "random-nodes", "almost-random-edges"],
            "replicas": 3,
            "base_seed": 11,
        }
        data.update(overrides)
        return config_from_mapping(data, base_dir=tmp_path)

    return build


class TestConfig:
    """Loading and validating experiment configurations."""

    def test_defaults_filled(self, small_config):
        config = small_config()
        assert config.checkpoints == checkpoint_grid(0.1)
        assert config.checkpoints[-1] == 0.9
        assert config.apl_enabled is True
        assert config.restrict_to_lcc is True
        assert config.breakdown_threshold == 0.10
        assert config.jobs == 1
        assert config.sources[0].path.is_absolute()
        assert config.sources[1].generated

    def test_every_problem_reported(self, tmp_path):
        data = {
            "sources": [{"name": "x", "path": "missing.txt"}],
            "strategies": ["targeted-nodes", "sideways"],
            "replicas": 0,
            "checkpoints": [0.5, 0.1],
            "colour": "blue",
        }
        with pytest.raises(ConfigError) as exc:
            config_from_mapping(data, base_dir=tmp_path)
        problems = exc.value.problems
        assert len(problems) == 5
        assert any("missing.txt" in p for p in problems)
        assert any("colour" in p for p in problems)
        assert str(len(problems)) in str(exc.value)

    def test_infeasible_generator_rejected(self, tmp_path):
        data = {
            "sources": [
                {"name": "g", "generator": {"model": "random", "n": 3, "target_m": 9}}
            ],
            "strategies": ["random-nodes"],
        }
        with pytest.raises(ConfigError) as exc:
            config_from_mapping(data, base_dir=tmp_path)
        assert "source 'g'" in exc.value.problems[0]

    def test_top_level_must_be_mapping(self):
        with pytest.raises(ConfigError):
            config_from_mapping(["sources"])

    def test_step_grid(self, small_config):
        config = small_config(step=0.05)
        assert len(config.checkpoints) == 20
        assert config.checkpoints[1] == 0.05

    def test_step_must_divide_one(self, small_config):
        with pytest.raises(ConfigError):
            small_config(step=0.3)

    def test_step_and_list_conflict(self, small_config):
        with pytest.raises(ConfigError):
            small_config(step=0.1, checkpoints=[0.0, 0.5])

    def test_strategy_options(self, small_config):
        config = small_config(
            strategies=[
                {"kind": "targeted-nodes", "recompute": True},
                {"kind": "almost-random-nodes", "eligibility": "initial"},
            ]
        )
        assert config.strategies[0].label == "targeted-nodes+recompute"
        assert config.strategies[1].eligibility is Eligibility.INITIAL
        assert config.strategies[1].label == "almost-random-nodes+initial"

    def test_equivalent_holme_kim_calibrated(self, small_config):
        config = small_config(
            sources=[
                {
                    "name": "blog-HK",
                    "equivalent_to": "blog",
                    "model": "small-world-scale-free",
                },
                {"name": "blog-SF", "equivalent_to": "blog", "model": "scale-free"},
                {
                    "name": "fixed",
                    "equivalent_to": "blog",
                    "model": "small-world-scale-free",
                    "p_triad": 0.3,
                },
            ]
        )
        hk, sf, fixed = config.sources
        assert hk.generator.n == 1222
        assert hk.target_clustering == 0.24
        assert sf.target_clustering is None
        assert fixed.target_clustering is None
        assert fixed.generator.p_triad == 0.3

    def test_unknown_dataset(self, small_config):
        with pytest.raises(ConfigError):
            small_config(sources=[{"name": "x", "equivalent_to": "myspace"}])

    def test_load_yaml_and_json(self, write_file):
        write_file("net.txt", TWO_TRIANGLES)
        yaml_path = write_file(
            "exp.yaml",
            "sources:\n  - {name: f, path: net.txt}\nstrategies: [random-edges]\n"
            "replicas: 2\n",
        )
        json_path = write_file(
            "exp.json",
            json.dumps(
                {
                    "sources": [{"name": "f", "path": "net.txt"}],
                    "strategies": ["random-edges"],
                    "replicas": 2,
                }
            ),
        )
        assert load_config(yaml_path) == load_config(json_path)

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "nope.yaml")

    def test_checkpoint_grid(self):
        assert checkpoint_grid(0.25) == (0.0, 0.25, 0.5, 0.75)
        assert checkpoint_grid(0.5, include_end=True) == (0.0, 0.5, 1.0)

    @pytest.mark.parametrize("step", [0, 0.0, -0.1, 1.5, float("nan")])
    def test_checkpoint_grid_rejects_degenerate_steps(self, step):
        with pytest.raises(ValueError, match="step"):
            checkpoint_grid(step)

    def test_generator_calibrate_flag(self, small_config):
        def hk(**extra):
            generator = {
                "model": "small-world-scale-free",
                "n": 60,
                "target_m": 180,
                "target_clustering": 0.3,
            }
            return {"name": "hk", "generator": generator, **extra}

        assert small_config(sources=[hk()]).sources[0].target_clustering == 0.3
        fixed = small_config(sources=[hk(calibrate=False)]).sources[0]
        assert fixed.target_clustering is None
        with pytest.raises(ConfigError) as exc:
            small_config(sources=[hk(calibrate="yes")])
        assert any("calibrate" in p for p in exc.value.problems)

    def test_target_clustering_ignored_outside_holme_kim(self, small_config):
        source = {
            "name": "er",
            "generator": {
                "model": "random",
                "n": 40,
                "target_m": 80,
                "target_clustering": 0.3,
            },
        }
        assert small_config(sources=[source]).sources[0].target_clustering is None

    def test_keys_checked_per_source_kind(self, small_config, write_file):
        write_file("other.txt", TWO_TRIANGLES)
        source = {"name": "f", "path": "other.txt", "calibrate": False}
        with pytest.raises(ConfigError) as exc:
            small_config(sources=[source])
        assert "calibrate" in exc.value.problems[0]

    def test_packaged_protocol(self):
        config = load_config(PROTOCOL)
        assert len(config.sources) == 16
        assert all(source.generated for source in config.sources)
        assert len(config.strategies) == 6
        assert config.replicas == 5
        assert config.generated_networks == 80
        assert config.checkpoints == checkpoint_grid(0.1)


class TestRun:
    """End-to-end sweeps."""

    def test_record_count(self, small_config):
        config = small_config()
        result = run(config)
        assert len(result.records) == 2 * 3 * 3
        assert result.networks_generated == 3
        assert len(result.keys()) == 6

    def test_row_order(self, small_config):
        result = run(small_config())
        order = [(r.source, r.strategy, r.replica) for r in result.records]
        assert order[0] == ("file", "targeted-nodes", 0)
        assert order[3] == ("file", "random-nodes", 0)
        assert order[-1] == ("er", "almost-random-edges", 2)

    def test_replica_seeds(self, small_config):
        result = run(small_config())
        assert sorted({r.seed for r in result.records}) == [11, 12, 13]

    def test_single_replica_equals_series(self, small_config):
        result = run(small_config(replicas=1))
        record = result.records[0]
        points = result.series(record.source, record.strategy)
        for point, raw in zip(points, record.series.points):
            assert point.lcc_mean == raw.lcc_fraction
            assert point.lcc_std == 0.0
            assert point.apl_mean == raw.apl

    def test_deterministic_strategy_has_no_spread(self, small_config):
        result = run(small_config())
        # the file graph is shared and targeted order is seed-free
        assert all(p.lcc_std == 0.0 for p in result.series("file", "targeted-nodes"))

    def test_intact_start(self, small_config):
        result = run(small_config())
        for points in result.points.values():
            assert points[0].lcc_mean == 1.0

    def test_mean_within_replica_range(self, small_config):
        result = run(small_config())
        values = defaultdict(list)
        for r in result.records:
            for i, point in enumerate(r.series.points):
                values[(r.source, r.strategy, i)].append(point.lcc_fraction)
        for (source, strategy), points in result.points.items():
            for i, point in enumerate(points):
                observed = values[(source, strategy, i)]
                assert min(observed) - 1e-12 <= point.lcc_mean <= max(observed) + 1e-12
                assert point.lcc_std >= 0.0

    def test_byte_identical_reruns(self, small_config):
        outputs = []
        for _ in range(2):
            buffer = io.StringIO()
            emit_csv(run(small_config()), buffer)
            outputs.append(buffer.getvalue())
        assert outputs[0] == outputs[1]

    def test_parallel_matches_serial(self, small_config):
        serial, parallel = io.StringIO(), io.StringIO()
        emit_csv(run(small_config(jobs=1)), serial)
        emit_csv(run(small_config(jobs=2)), parallel)
        assert serial.getvalue() == parallel.getvalue()

    def test_calibrated_source(self, tmp_path):
        data = {
            "sources": [
                {
                    "name": "hk",
                    "generator": {
                        "model": "small-world-scale-free",
                        "n": 60,
                        "target_m": 180,
                        "target_clustering": 0.3,
                    },
                }
            ],
            "strategies": ["random-nodes"],
            "replicas": 1,
        }
        result = run(config_from_mapping(data, base_dir=tmp_path))
        assert 0.0 <= result.calibrated["hk"] <= 1.0
        assert result.get_summary()["calibrated_p_triad"] == result.calibrated

    def test_generator_failure_names_source(self, tmp_path):
        data = {
            "sources": [
                {
                    "name": "tiny-ring",
                    "generator": {"model": "small-world", "n": 4, "target_m": 6},
                }
            ],
            "strategies": ["random-nodes"],
            "replicas": 1,
        }
        with pytest.raises(GeneratorError) as exc:
            run(config_from_mapping(data, base_dir=tmp_path))
        assert "tiny-ring" in str(exc.value)


class TestBreakdown:
    """Percolation breakdown fraction."""

    def test_never_breaks(self):
        assert percolation_breakdown([(0.0, 1.0), (0.5, 1.0)]) is None

    def test_first_checkpoint_below_threshold(self):
        assert percolation_breakdown([(0.1, 0.5), (0.2, 0.05)]) == 0.2

    def test_threshold_is_strict(self):
        assert percolation_breakdown([(0.1, 0.1), (0.2, 0.09)]) == 0.2

    def test_series_input(self):
        series = ResilienceSeries(
            AttackKind.TARGETED_NODES, [SeriesPoint(0.0, 1.0), SeriesPoint(0.3, 0.02)]
        )
        assert percolation_breakdown(series) == 0.3

    def test_empty(self):
        with pytest.raises(ValueError):
            percolation_breakdown([])


class TestSpread:
    def test_largest_gap(self):
        records = [
            _record("s", "random-nodes", 0, [(0.0, 1.0, None), (0.5, 0.5, None)]),
            _record("s", "random-edges", 0, [(0.0, 1.0, None), (0.5, 0.9, None)]),
            _record("s", "targeted-nodes", 0, [(0.0, 1.0, None), (0.5, 0.0, None)]),
        ]
        aggregate = aggregate_records(records)
        spread = strategy_spread(aggregate, "s", ["random-nodes", "random-edges"])
        assert spread == pytest.approx(0.4)
        assert strategy_spread(aggregate, "s", ["random-nodes"]) is None


class TestAggregation:
    def test_apl_averages_defined_replicas_only(self):
        records = [
            _record("s", "random-nodes", 0, [(0.5, 0.4, 2.0)]),
            _record("s", "random-nodes", 1, [(0.5, 0.2, 3.0)]),
            _record("s", "random-nodes", 2, [(0.5, 0.0, None)]),
        ]
        point = aggregate_records(records).series("s", "random-nodes")[0]
        assert point.apl_defined == 2
        assert point.apl_mean == pytest.approx(2.5)
        assert point.apl_std == pytest.approx(0.5)
        assert point.lcc_mean == pytest.approx(0.2)
        assert point.lcc_std == pytest.approx(np.std([0.4, 0.2, 0.0]))

    def test_mismatched_grids(self):
        records = [
            _record("s", "random-nodes", 0, [(0.0, 1.0, None)]),
            _record("s", "random-nodes", 1, [(0.0, 1.0, None), (0.5, 0.5, None)]),
        ]
        with pytest.raises(ValueError):
            aggregate_records(records)


class TestEmit:
    """CSV and JSON result files."""

    def test_empty_aggregate_is_header_only(self):
        buffer = io.StringIO()
        emit_raw_csv(AggregateSeries(), buffer)
        header = "source,strategy,replica,frac_removed,lcc_frac,apl\n"
        assert buffer.getvalue() == header

    def test_single_point_row(self):
        aggregate = aggregate_records(
            [_record("blog", "random-nodes", 0, [(0.1, 0.95, 2.7)])]
        )
        buffer = io.StringIO()
        emit_raw_csv(aggregate, buffer)
        assert buffer.getvalue().splitlines()[1] == "blog,random-nodes,0,0.1,0.95,2.7"

    def test_absent_apl_is_empty_field(self):
        aggregate = aggregate_records(
            [_record("s", "random-edges", 0, [(1.0, 0.1, None)])]
        )
        buffer = io.StringIO()
        emit_raw_csv(aggregate, buffer)
        assert buffer.getvalue().splitlines()[1] == "s,random-edges,0,1,0.1,"

    def test_six_significant_digits(self):
        aggregate = aggregate_records(
            [_record("s", "random-nodes", 0, [(0.1, 2 / 3, None)])]
        )
        buffer = io.StringIO()
        emit_raw_csv(aggregate, buffer)
        assert buffer.getvalue().splitlines()[1].split(",")[4] == "0.666667"

    def test_recomputed_means_match(self, small_config):
        result = run(small_config())
        raw, agg = io.StringIO(), io.StringIO()
        emit_raw_csv(result, raw)
        emit_aggregate_csv(result, agg)

        values = defaultdict(list)
        for row in csv.DictReader(io.StringIO(raw.getvalue())):
            key = (row["source"], row["strategy"], row["frac_removed"])
            values[key].append(float(row["lcc_frac"]))
        rows = list(csv.DictReader(io.StringIO(agg.getvalue())))
        assert len(rows) == len(values)
        for row in rows:
            key = (row["source"], row["strategy"], row["frac_removed"])
            assert float(row["lcc_frac_mean"]) == pytest.approx(
                np.mean(values[key]), rel=1e-5
            )

    def test_combined_file_has_both_tables(self):
        buffer = io.StringIO()
        emit_csv(AggregateSeries(), buffer)
        lines = buffer.getvalue().splitlines()
        assert lines[0].startswith("source,strategy,replica")
        assert lines[1] == ""
        assert lines[2].startswith("source,strategy,frac_removed,lcc_frac_mean")

    def test_summary(self, small_config):
        config = small_config()
        result = run(config)
        buffer = io.StringIO()
        write_summary(result, buffer, config)
        summary = json.loads(buffer.getvalue())
        assert summary["networks_generated"] == 3
        assert summary["series_executed"] == 18
        assert set(summary["breakdown"]) == {"file", "er"}
        assert summary["config"]["replicas"] == 3
        assert len(summary["fallback_onsets"]["er"]["almost-random-edges"]) == 3

    def test_strategy_spec_labels(self):
        assert StrategySpec(AttackKind.RANDOM_EDGES).label == "random-edges"


@pytest.mark.slow
class TestReplicaStability:
    def test_random_graph_replicas_agree(self, tmp_path):
        data = {
            "sources": [
                {"name": "blog-RD", "equivalent_to": "blog", "model": "random"}
            ],
            "strategies": ["random-nodes"],
            "replicas": 5,
            "apl_enabled": False,
        }
        result = run(config_from_mapping(data, base_dir=tmp_path))
        for point in result.series("blog-RD", "random-nodes"):
            assert point.lcc_std < 0.01
            assert point.lcc_mean >= 0.8 * (1 - point.fraction_removed)

    @pytest.mark.parametrize(
        "dataset,model",
        [
            ("epinions", "random"),
            ("epinions", "small-world"),
            ("epinions", "scale-free"),
            ("epinions", "small-world-scale-free"),
        ],
    )
    def test_random_failure_decays_linearly(self, dataset, model, tmp_path):
        data = {
            "sources": [
                {
                    "name": "net",
                    "equivalent_to": dataset,
                    "model": model,
                    "p_triad": 0.5,
                }
            ],
            "strategies": ["random-nodes"],
            "replicas": 2,
            "apl_enabled": False,
        }
        result = run(config_from_mapping(data, base_dir=tmp_path))
        for point in result.series("net", "random-nodes"):
            assert point.lcc_mean >= 0.8 * (1 - point.fraction_removed)


# Highest fraction at which each strategy's curves are compared across models.
# Edge attacks strip scale-free hubs of all links late in the sweep.
AGREEMENT_LIMITS = {
    "random-nodes": 1.0,
    "almost-random-nodes": 0.7,
    "random-edges": 0.8,
    "almost-random-edges": 0.5,
    "targeted-edges": 0.2,
}
MODELS = ("random", "small-world", "scale-free", "small-world-scale-free")


@pytest.mark.slow
class TestModelAgreement:
    """Blog-sized networks of the four generator models under attack."""

    @pytest.fixture(scope="class")
    def result(self, tmp_path_factory):
        data = {
            "sources": [
                {
                    "name": model,
                    "equivalent_to": "blog",
                    "model": model,
                    "p_triad": 0.5,
                }
                for model in MODELS
            ],
            "strategies": ["targeted-nodes", *AGREEMENT_LIMITS],
            "replicas": 2,
            "apl_enabled": False,
        }
        return run(config_from_mapping(data, base_dir=tmp_path_factory.mktemp("m")))

    @pytest.mark.parametrize("strategy", list(AGREEMENT_LIMITS))
    def test_non_targeted_node_strategies_agree(self, result, strategy):
        curves = [result.series(model, strategy) for model in MODELS]
        for points in zip(*curves):
            if points[0].fraction_removed > AGREEMENT_LIMITS[strategy] + 1e-9:
                break
            values = [point.lcc_mean for point in points]
            assert max(values) - min(values) <= 0.1, points[0].fraction_removed

    def test_targeted_nodes_strip_hub_networks_of_edges(self, result):
        curves = {model: result.series(model, "targeted-nodes") for model in MODELS}
        gaps = []
        for rd, sw, sf, hk in zip(*(curves[model] for model in MODELS)):
            if rd.fraction_removed > 0.5:
                break
            homogeneous = min(rd.edge_mean, sw.edge_mean)
            gaps.append(homogeneous - max(sf.edge_mean, hk.edge_mean))
        assert max(gaps) > 0.2


@pytest.mark.slow
class TestMeasuredDatasets:
    """Targeted attacks on the measured networks, when present under data/."""

    def _read(self, filename):
        path = DATA_DIR / filename
        if not path.exists():
            pytest.skip(f"{filename} not available")
        graph, _ = read_graph(path)
        return graph

    def test_author_network_disintegrates_early(self):
        graph = self._read("authors.net")
        plan = build_plan(graph, AttackKind.TARGETED_NODES)
        series = execute(graph, plan, (0.0, 0.1), apl=False)
        assert series.points[1].lcc_fraction < 0.10

    def test_epinions_breakdown_near_half(self):
        graph = self._read("epinions.txt")
        plan = build_plan(graph, AttackKind.TARGETED_NODES)
        series = execute(graph, plan, default_checkpoints(), apl=False)
        breakdown = percolation_breakdown(series)
        assert breakdown is not None
        assert 0.4 <= breakdown <= 0.6
