"""Flat YAML run configs.

A config is a single mapping of scalar (or list-of-scalar) values whose keys
are the :class:`RunConfig` field names::

    # strong learner on five 2-cliques
    learner: strong
    graph: union_of_cliques
    clique_sizes: [2, 2, 2, 2, 2]
    horizon: 8000
    repetitions: 50
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ConfigError
from .harness import RunConfig

__all__ = ["load_config", "parse_config"]


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a key/value mapping")
    for key, value in data.items():
        if not isinstance(key, str):
            raise ConfigError(f"{source}: key {key!r} is not a string")
        items = value if isinstance(value, list) else [value]
        if any(isinstance(v, (dict, list)) for v in items):
            raise ConfigError(f"{source}: key {key!r} must hold a scalar or a flat list")
    try:
        return RunConfig.from_mapping(data)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))
