"""CLI configuration: defaults, JSON config file, flag overrides.

Precedence is defaults < config file < command-line flags. The file is a
single JSON document with optional sections ``bm25``, ``predictor``,
``tagger`` and ``paths``; unknown sections or keys are hard errors.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError


@dataclass(frozen=True)
class Bm25Section:
    alpha: float = 1.2
    beta: float = 0.75


@dataclass(frozen=True)
class PredictorSection:
    k: int = 100
    fallback: str | None = None  # None or "majority"


@dataclass(frozen=True)
class TaggerSection:
    n_as: int = 64
    n_st: int = 128
    d_model: int = 768
    window: float = 2.0


@dataclass(frozen=True)
class PathsSection:
    repository: str = "repository.jsonl"
    model: str = "model.json"
    reports: str = "reports"


@dataclass(frozen=True)
class CliConfig:
    bm25: Bm25Section = field(default_factory=Bm25Section)
    predictor: PredictorSection = field(default_factory=PredictorSection)
    tagger: TaggerSection = field(default_factory=TaggerSection)
    paths: PathsSection = field(default_factory=PathsSection)


_SECTIONS = {
    "bm25": Bm25Section,
    "predictor": PredictorSection,
    "tagger": TaggerSection,
    "paths": PathsSection,
}


def load_config(path: str | os.PathLike) -> CliConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    sections = {}
    for name, value in doc.items():
        cls = _SECTIONS.get(name)
        if cls is None:
            raise ConfigError(f"unknown config section {name!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        known = {f.name for f in fields(cls)}
        unknown = set(value) - known
        if unknown:
            raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
        try:
            sections[name] = cls(**value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad values in section {name!r}: {exc}") from exc
    return CliConfig(**sections)


def apply_overrides(config: CliConfig, **overrides) -> CliConfig:
    """Replace individual leaf fields; None values mean 'not given'."""
    by_section: dict[str, dict] = {}
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        by_section.setdefault(section, {})[key] = value
    out = config
    for section, values in by_section.items():
        out = replace(out, **{section: replace(getattr(out, section), **values)})
    return out
