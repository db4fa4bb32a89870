"""One configuration object collecting every tunable constant of the pipeline.

Settings live in a single JSON file whose sections mirror the dataclasses they
populate; anything omitted keeps its default.  Precedence, lowest to highest:
built-in defaults, the config file, then command-line flags.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .curation import (
    DEFAULT_CONTACT_RAMP,
    DEFAULT_GROUND_DELTA,
    DEFAULT_SUPPORT_JOINTS,
    FilterThresholds,
)
from .filtering import FilterSpec
from .retarget import LossWeights, OptimizerConfig

ENV_CONFIG = "PHYSINK_CONFIG"

_SECTIONS = ("filter", "thresholds", "optimizer", "contact", "joints", "paths")


class ConfigError(ValueError):
    """Raised for unreadable, malformed, or unrecognized configuration."""


@dataclass(frozen=True)
class JointNames:
    """Source joint names the pipeline needs to know by role."""

    root: str = "pelvis"
    spine: str = "spine1"
    support: tuple[str, ...] = DEFAULT_SUPPORT_JOINTS
    heading: tuple[str, str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        if self.heading is not None:
            heading = tuple(self.heading)
            if len(heading) != 2:
                raise ConfigError(
                    f"joints.heading needs exactly two names, got {list(heading)}"
                )
            object.__setattr__(self, "heading", heading)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the pipeline stages need, bundled for the CLI."""

    filter: FilterSpec = field(default_factory=FilterSpec)
    thresholds: FilterThresholds = field(default_factory=FilterThresholds)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    ramp_top: float = DEFAULT_CONTACT_RAMP
    ground_delta: float = DEFAULT_GROUND_DELTA
    joints: JointNames = field(default_factory=JointNames)
    robot_path: Path | None = None
    correspondence_path: Path | None = None

    def __post_init__(self):
        for name in ("ramp_top", "ground_delta"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"contact.{name} must be positive")

    def to_dict(self) -> dict:
        return {
            "filter": _dataclass_dict(self.filter),
            "thresholds": _dataclass_dict(self.thresholds),
            "optimizer": {
                **{
                    k: v
                    for k, v in _dataclass_dict(self.optimizer).items()
                    if k != "weights"
                },
                "weights": _dataclass_dict(self.optimizer.weights),
            },
            "contact": {"ramp_top": self.ramp_top, "ground_delta": self.ground_delta},
            "joints": {
                "root": self.joints.root,
                "spine": self.joints.spine,
                "support": list(self.joints.support),
                "heading": None if self.joints.heading is None else list(self.joints.heading),
            },
            "paths": {
                "robot": None if self.robot_path is None else str(self.robot_path),
                "correspondence": None
                if self.correspondence_path is None
                else str(self.correspondence_path),
            },
        }


def _dataclass_dict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _check_keys(section: dict, allowed, label: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {label}: {', '.join(unknown)}")


def _build(cls, section: dict, label: str):
    if not isinstance(section, dict):
        raise ConfigError(f"config section {label!r} must be an object")
    allowed = [f.name for f in fields(cls)]
    _check_keys(section, allowed, label)
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {label} section: {exc}") from exc


def _build_optimizer(section: dict) -> OptimizerConfig:
    if not isinstance(section, dict):
        raise ConfigError("config section 'optimizer' must be an object")
    section = dict(section)
    weights = section.pop("weights", None)
    allowed = [f.name for f in fields(OptimizerConfig) if f.name != "weights"]
    _check_keys(section, allowed, "optimizer")
    if weights is not None:
        section["weights"] = _build(LossWeights, weights, "optimizer.weights")
    try:
        return OptimizerConfig(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad optimizer section: {exc}") from exc


def _resolve(value, base_dir: Path | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return path


def config_from_dict(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    """Build a PipelineConfig from nested plain data, defaulting omitted keys.

    Relative paths in the "paths" section are resolved against base_dir (the
    config file's directory) so a config travels with its data.
    """
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(data, _SECTIONS, "config")
    contact = dict(data.get("contact", {}))
    _check_keys(contact, ("ramp_top", "ground_delta"), "contact")
    joints_raw = dict(data.get("joints", {}))
    joints = _build(JointNames, joints_raw, "joints")
    paths = dict(data.get("paths", {}))
    _check_keys(paths, ("robot", "correspondence"), "paths")
    return PipelineConfig(
        filter=_build(FilterSpec, data.get("filter", {}), "filter"),
        thresholds=_build(FilterThresholds, data.get("thresholds", {}), "thresholds"),
        optimizer=_build_optimizer(data.get("optimizer", {})),
        ramp_top=contact.get("ramp_top", DEFAULT_CONTACT_RAMP),
        ground_delta=contact.get("ground_delta", DEFAULT_GROUND_DELTA),
        joints=joints,
        robot_path=_resolve(paths.get("robot"), base_dir),
        correspondence_path=_resolve(paths.get("correspondence"), base_dir),
    )


def load_pipeline_config(path=None) -> PipelineConfig:
    """Load configuration from a JSON file.

    Falls back to the file named by the PHYSINK_CONFIG environment variable,
    and to pure defaults when neither is given.
    """
    if path is None:
        env = os.environ.get(ENV_CONFIG)
        if not env:
            return PipelineConfig()
        path = env
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def override_config(
    cfg: PipelineConfig,
    *,
    mode: str | None = None,
    seed: int | None = None,
) -> PipelineConfig:
    """Apply command-line overrides on top of a loaded config."""
    optimizer = cfg.optimizer
    if mode is not None:
        optimizer = replace(optimizer, mode=mode)
    if seed is not None:
        optimizer = replace(optimizer, seed=seed)
    if optimizer is cfg.optimizer:
        return cfg
    return replace(cfg, optimizer=optimizer)
