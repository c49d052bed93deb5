"""
Packaged defaults (config/defaults.yaml).
"""

import math
from functools import lru_cache
from importlib import resources
from typing import Any, Dict

import yaml


@lru_cache(maxsize=None)
def load_defaults() -> Dict[str, Any]:
    """Load and cache the packaged defaults document."""
    text = (
        resources.files("netresilience")
        .joinpath("config", "defaults.yaml")
        .read_text(encoding="utf-8")
    )
    return yaml.safe_load(text)


def dataset_preset(name: str) -> Dict[str, Any]:
    """Return the reference statistics of a named dataset."""
    datasets = load_defaults()["datasets"]
    try:
        return datasets[name]
    except KeyError:
        known = ", ".join(sorted(datasets))
        raise KeyError(f"unknown dataset '{name}' (known: {known})") from None


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves away from zero for positives."""
    return int(math.floor(value + 0.5))
