"""YAML scenario and sweep configuration files.

Scenario file (flat mapping; every key optional)::

    K: 30
    U: 2
    xi_fov: 85          # degrees in files, radians in memory
    user_positions: [[2.25, 0.5, 0.85], [2.75, 0.5, 0.85]]
    seed: 3
    ga: {population: 150, generations: 100}

Keys are those accepted by :func:`risvlc.scenario.build_default_scenario`.
Angle keys (``xi_fov``, ``phi_half``, ``alpha_mean``, ``alpha_std``,
``fixed_alpha``, ``fixed_beta``) are read as degrees.  ``ga`` holds
:class:`risvlc.optimizer.GaConfig` fields.

A sweep file adds ``param``, ``values``, ``seeds`` (count or list) and
``problems``; everything else is the fixed part of the scenario.  See
``configs/`` for commented examples.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .optimizer import GaConfig
from .scenario import KNOWN_KEYS, ScenarioError

ANGLE_KEYS = ("xi_fov", "phi_half", "alpha_mean", "alpha_std", "fixed_alpha", "fixed_beta")
SCALES = {"desk": {"K": 30, "U": 2}, "paper": {}}
_GA_KEYS = {f.name for f in fields(GaConfig)}


class ConfigError(ValueError):
    """Malformed or unreadable configuration file."""


def to_overrides(doc: Mapping[str, Any]) -> dict[str, Any]:
    """Map file keys (degrees) onto scenario override keys (``*_deg`` for angles)."""
    out = {}
    for key, value in doc.items():
        name = f"{key}_deg" if key in ANGLE_KEYS else key
        if name not in KNOWN_KEYS:
            raise ConfigError(f"unknown scenario key {key!r}")
        out[name] = value
    return out


def from_overrides(overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Inverse of :func:`to_overrides`."""
    return {(k[:-4] if k.endswith("_deg") else k): v for k, v in overrides.items()}


def ga_config(doc: Mapping[str, Any] | None, **changes) -> GaConfig:
    doc = dict(doc or {})
    unknown = set(doc) - _GA_KEYS
    if unknown:
        raise ConfigError(f"unknown ga keys {sorted(unknown)}")
    try:
        return GaConfig(**{**doc, **changes})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid ga section: {exc}") from exc


def read_yaml(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


@dataclass(frozen=True)
class RunConfig:
    """Scenario overrides, GA settings and seed for a single run."""

    overrides: dict = field(default_factory=dict)
    ga: GaConfig = field(default_factory=GaConfig)
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {**from_overrides(self.overrides), "seed": self.seed, "ga": asdict(self.ga)}


def parse_run_config(doc: Mapping[str, Any], scale: str = "desk") -> RunConfig:
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r}")
    doc = dict(doc)
    ga = ga_config(doc.pop("ga", None))
    seed = int(doc.pop("seed", 0))
    overrides = {**SCALES[scale], **to_overrides(doc)}
    try:
        _check(overrides, seed)
    except ScenarioError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(overrides, ga, seed)


def load_run_config(path: str | Path | None, scale: str = "desk") -> RunConfig:
    return parse_run_config(read_yaml(path) if path else {}, scale)


def dump_run_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))


def _check(overrides: Mapping[str, Any], seed: int) -> None:
    from .scenario import build_default_scenario

    build_default_scenario(overrides, seed=seed)
