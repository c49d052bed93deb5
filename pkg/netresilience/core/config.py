"""
Experiment configuration: data model, file loading and validation.

Configuration files are YAML or JSON (JSON is read by the same YAML
loader). Validation collects every problem before failing so a user can fix
a config in one pass.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union
import logging

import yaml

from .attacks import AttackKind, Eligibility
from .defaults import load_defaults
from .errors import ConfigError
from .generators import DEFAULT_BETA, DEFAULT_P_TRIAD, GeneratorSpec, Model
from .ingest import FORMATS

logger = logging.getLogger(__name__)

_TOP_LEVEL_KEYS = {
    "sources",
    "strategies",
    "replicas",
    "base_seed",
    "checkpoints",
    "step",
    "apl_enabled",
    "apl_sources",
    "restrict_to_lcc",
    "breakdown_threshold",
    "jobs",
}
# Keys each kind of source accepts, besides 'name'.
_SOURCE_KEYS = {
    "path": {"path", "format"},
    "generator": {"generator", "calibrate"},
    "equivalent_to": {
        "equivalent_to",
        "model",
        "beta",
        "p_triad",
        "target_clustering",
        "calibrate",
    },
}
_GENERATOR_KEYS = {"model", "n", "target_m", "beta", "p_triad", "target_clustering"}


def checkpoint_grid(step: float, include_end: bool = False) -> Tuple[float, ...]:
    """Uniform grid 0, step, 2*step, ... below 1 (or up to 1 inclusive)."""
    if not 0.0 < step <= 1.0:
        raise ValueError(f"step must be in (0, 1], got {step}")
    count = int(round(1.0 / step))
    if abs(count * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1 evenly")
    last = count + 1 if include_end else count
    return tuple(round(i * step, 10) for i in range(last))


def default_checkpoints() -> Tuple[float, ...]:
    grid = load_defaults()["checkpoints"]
    return checkpoint_grid(float(grid["step"]), bool(grid["include_end"]))


@dataclass(frozen=True)
class SourceSpec:
    """One network source: a file on disk or a generator."""

    name: str
    path: Optional[Path] = None
    format: Optional[str] = None
    generator: Optional[GeneratorSpec] = None
    # Holme-Kim sources with a target are calibrated before generation
    target_clustering: Optional[float] = None

    @property
    def generated(self) -> bool:
        return self.generator is not None


@dataclass(frozen=True)
class StrategySpec:
    kind: AttackKind
    recompute: bool = False
    eligibility: Eligibility = Eligibility.CURRENT

    @property
    def label(self) -> str:
        """Name used in result tables."""
        label = AttackKind(self.kind).value
        if self.recompute:
            label += "+recompute"
        if Eligibility(self.eligibility) is Eligibility.INITIAL:
            label += "+initial"
        return label


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a sweep."""

    sources: Tuple[SourceSpec, ...]
    strategies: Tuple[StrategySpec, ...]
    replicas: int = 5
    base_seed: int = 0
    checkpoints: Tuple[float, ...] = field(default_factory=default_checkpoints)
    apl_enabled: bool = True
    apl_sources: Optional[int] = None
    restrict_to_lcc: bool = True
    breakdown_threshold: float = 0.10
    jobs: int = 1

    @property
    def generated_networks(self) -> int:
        """Networks built per sweep: one per generated source and replica."""
        return self.replicas * sum(1 for source in self.sources if source.generated)

    def as_dict(self) -> Dict[str, Any]:
        """JSON-friendly echo of the configuration."""
        data = asdict(self)
        for source in data["sources"]:
            if source["path"] is not None:
                source["path"] = str(source["path"])
            if source["generator"] is not None:
                source["generator"]["model"] = Model(
                    source["generator"]["model"]
                ).value
        for strategy in data["strategies"]:
            strategy["kind"] = AttackKind(strategy["kind"]).value
            strategy["eligibility"] = Eligibility(strategy["eligibility"]).value
        data["checkpoints"] = list(data["checkpoints"])
        return data


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_probability(value: Any, what: str, problems: List[str]) -> None:
    if not _is_number(value) or not 0.0 <= value <= 1.0:
        problems.append(f"{what} must be a number in [0, 1], got {value!r}")


def _parse_source(
    index: int, entry: Any, base_dir: Path, problems: List[str]
) -> Optional[SourceSpec]:
    where = f"sources[{index}]"
    if not isinstance(entry, Mapping):
        problems.append(f"{where} must be a mapping")
        return None
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        problems.append(f"{where}: 'name' is required")
        name = f"source-{index}"
    where = f"source '{name}'"

    kinds = [key for key in _SOURCE_KEYS if key in entry]
    if len(kinds) != 1:
        problems.append(
            f"{where}: exactly one of path, generator, equivalent_to is required"
        )
        return None
    unknown = set(entry) - _SOURCE_KEYS[kinds[0]] - {"name"}
    if unknown:
        problems.append(
            f"{where}: unknown keys for a {kinds[0]} source {sorted(unknown)}"
        )
    calibrate = entry.get("calibrate", True)
    if not isinstance(calibrate, bool):
        problems.append(f"{where}: calibrate must be true or false")
        calibrate = True

    if "path" in entry:
        path = Path(str(entry["path"]))
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            problems.append(f"{where}: file not found: {path}")
        fmt = entry.get("format")
        if fmt is not None and fmt not in FORMATS:
            problems.append(f"{where}: unknown format {fmt!r}")
        return SourceSpec(name=name, path=path, format=fmt)

    if "generator" in entry:
        gen = entry["generator"]
        if not isinstance(gen, Mapping):
            problems.append(f"{where}: 'generator' must be a mapping")
            return None
        unknown = set(gen) - _GENERATOR_KEYS
        if unknown:
            problems.append(f"{where}: unknown generator keys {sorted(unknown)}")
        model, n, target_m = gen.get("model"), gen.get("n"), gen.get("target_m")
        beta = gen.get("beta", DEFAULT_BETA)
        p_triad = gen.get("p_triad", DEFAULT_P_TRIAD)
        target_clustering = gen.get("target_clustering")
        explicit_p_triad = "p_triad" in gen
    else:
        dataset = entry["equivalent_to"]
        datasets = load_defaults()["datasets"]
        if dataset not in datasets:
            problems.append(
                f"{where}: unknown dataset {dataset!r} "
                f"(known: {', '.join(sorted(datasets))})"
            )
            return None
        preset = datasets[dataset]
        model, n, target_m = entry.get("model"), preset["nodes"], preset["edges"]
        beta = entry.get("beta", DEFAULT_BETA)
        p_triad = entry.get("p_triad", DEFAULT_P_TRIAD)
        target_clustering = entry.get("target_clustering")
        if target_clustering is None and model == Model.HOLME_KIM.value:
            target_clustering = preset["models"][model]["clustering"]
        explicit_p_triad = "p_triad" in entry

    calibrate = (
        calibrate
        and model == Model.HOLME_KIM.value
        and target_clustering is not None
        and not explicit_p_triad
    )

    valid_models = [m.value for m in Model]
    if model not in valid_models:
        problems.append(f"{where}: model must be one of {valid_models}, got {model!r}")
        return None
    if not _is_int(n) or not _is_int(target_m):
        problems.append(f"{where}: n and target_m must be integers")
        return None
    _check_probability(beta, f"{where}: beta", problems)
    _check_probability(p_triad, f"{where}: p_triad", problems)
    if target_clustering is not None:
        _check_probability(target_clustering, f"{where}: target_clustering", problems)
    spec = GeneratorSpec(
        Model(model), n, target_m, beta=float(beta), p_triad=float(p_triad)
    )
    problems.extend(f"{where}: {problem}" for problem in spec.problems())
    return SourceSpec(
        name=name,
        generator=spec,
        target_clustering=float(target_clustering) if calibrate else None,
    )


def _parse_strategy(
    index: int, entry: Any, problems: List[str]
) -> Optional[StrategySpec]:
    where = f"strategies[{index}]"
    if isinstance(entry, str):
        entry = {"kind": entry}
    if not isinstance(entry, Mapping):
        problems.append(f"{where} must be a kind name or a mapping")
        return None
    unknown = set(entry) - {"kind", "recompute", "eligibility"}
    if unknown:
        problems.append(f"{where}: unknown keys {sorted(unknown)}")
    kinds = [k.value for k in AttackKind]
    if entry.get("kind") not in kinds:
        problems.append(f"{where}: kind must be one of {kinds}")
        return None
    recompute = entry.get("recompute", False)
    if not isinstance(recompute, bool):
        problems.append(f"{where}: recompute must be true or false")
        recompute = False
    eligibility = entry.get("eligibility", Eligibility.CURRENT.value)
    if eligibility not in [e.value for e in Eligibility]:
        problems.append(f"{where}: eligibility must be 'current' or 'initial'")
        eligibility = Eligibility.CURRENT.value
    return StrategySpec(AttackKind(entry["kind"]), recompute, Eligibility(eligibility))


def _parse_checkpoints(data: Mapping, problems: List[str]) -> Tuple[float, ...]:
    min_step = float(load_defaults()["checkpoints"]["min_step"])
    if "checkpoints" in data and "step" in data:
        problems.append("give either 'checkpoints' or 'step', not both")
    if "step" in data:
        step = data["step"]
        if not _is_number(step) or not min_step - 1e-12 <= step <= 1.0:
            problems.append(f"step must be a number in [{min_step}, 1]")
            return default_checkpoints()
        try:
            return checkpoint_grid(float(step))
        except ValueError as e:
            problems.append(str(e))
            return default_checkpoints()
    if "checkpoints" not in data:
        return default_checkpoints()
    values = data["checkpoints"]
    if not isinstance(values, list) or not values:
        problems.append("checkpoints must be a non-empty list")
        return default_checkpoints()
    if not all(_is_number(v) for v in values):
        problems.append("checkpoints must all be numbers")
        return default_checkpoints()
    if any(not 0.0 <= v <= 1.0 for v in values):
        problems.append("checkpoints must lie within [0, 1]")
    if any(b <= a for a, b in zip(values, values[1:])):
        problems.append("checkpoints must be sorted and strictly increasing")
    return tuple(float(v) for v in values)


def config_from_mapping(
    data: Any, base_dir: Union[str, Path] = "."
) -> ExperimentConfig:
    """
    Build and validate an ExperimentConfig from parsed YAML/JSON.

    Raises:
        ConfigError: listing every problem found
    """
    base_dir = Path(base_dir)
    defaults = load_defaults()["harness"]
    problems: List[str] = []
    if not isinstance(data, Mapping):
        raise ConfigError(["configuration must be a mapping at the top level"])

    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        problems.append(f"unknown top-level keys {sorted(unknown)}")

    raw_sources = data.get("sources")
    sources: List[SourceSpec] = []
    if not isinstance(raw_sources, list) or not raw_sources:
        problems.append("sources must be a non-empty list")
    else:
        for index, entry in enumerate(raw_sources):
            source = _parse_source(index, entry, base_dir, problems)
            if source is not None:
                sources.append(source)
        names = [source.name for source in sources]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            problems.append(f"duplicate source names {duplicates}")

    raw_strategies = data.get("strategies")
    strategies: List[StrategySpec] = []
    if not isinstance(raw_strategies, list) or not raw_strategies:
        problems.append("strategies must be a non-empty list")
    else:
        for index, entry in enumerate(raw_strategies):
            strategy = _parse_strategy(index, entry, problems)
            if strategy is not None:
                strategies.append(strategy)
        labels = [strategy.label for strategy in strategies]
        if len(set(labels)) != len(labels):
            problems.append("strategies must not repeat")

    replicas = data.get("replicas", defaults["replicas"])
    if not _is_int(replicas) or replicas < 1:
        problems.append(f"replicas must be an integer >= 1, got {replicas!r}")
    base_seed = data.get("base_seed", defaults["base_seed"])
    if not _is_int(base_seed) or base_seed < 0:
        problems.append(f"base_seed must be a non-negative integer, got {base_seed!r}")
    jobs = data.get("jobs", defaults["jobs"])
    if not _is_int(jobs) or jobs < 1:
        problems.append(f"jobs must be an integer >= 1, got {jobs!r}")
    apl_enabled = data.get("apl_enabled", True)
    restrict_to_lcc = data.get("restrict_to_lcc", defaults["restrict_to_lcc"])
    flags = {"apl_enabled": apl_enabled, "restrict_to_lcc": restrict_to_lcc}
    for key, value in flags.items():
        if not isinstance(value, bool):
            problems.append(f"{key} must be true or false")
    apl_sources = data.get("apl_sources")
    if apl_sources is not None and (not _is_int(apl_sources) or apl_sources < 2):
        problems.append(f"apl_sources must be an integer >= 2, got {apl_sources!r}")
    threshold = data.get(
        "breakdown_threshold", load_defaults()["metrics"]["breakdown_threshold"]
    )
    if not _is_number(threshold) or not 0.0 < threshold <= 1.0:
        problems.append("breakdown_threshold must be in (0, 1]")
    checkpoints = _parse_checkpoints(data, problems)

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        sources=tuple(sources),
        strategies=tuple(strategies),
        replicas=replicas,
        base_seed=base_seed,
        checkpoints=checkpoints,
        apl_enabled=apl_enabled,
        apl_sources=apl_sources,
        restrict_to_lcc=restrict_to_lcc,
        breakdown_threshold=float(threshold),
        jobs=jobs,
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a YAML or JSON experiment configuration file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError([f"{path}: not valid YAML/JSON: {e}"]) from None
    config = config_from_mapping(data, base_dir=path.parent)
    logger.info(
        "Loaded %s: %d source(s), %d strateg(ies), %d replica(s)",
        path.name,
        len(config.sources),
        len(config.strategies),
        config.replicas,
    )
    return config


def all_strategies() -> Sequence[StrategySpec]:
    """The six strategies with default options."""
    return tuple(StrategySpec(kind) for kind in AttackKind)
