"""Run configuration: JSON file + flat overrides + dataset presets."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, IoError

FUSION_MODES = ("multimodal-cost", "visual-only", "text-only", "concat")

# Cluster counts of the public surgical benchmarks.
PRESETS: dict[str, dict[str, Any]] = {
    "cholec80": {"k": 7},
    "autolaparo": {"k": 7},
    "multibypass-phases": {"k": 12},
    "multibypass-steps": {"k": 46},
}


@dataclass
class TrainConfig:
    epochs: int = 15
    steps_per_epoch: int = 5
    learning_rate: float = 0.05
    temperature: float = 0.1
    latent_dim: int = 128
    seed: int = 0
    hard_labels: bool = False


@dataclass
class RunConfig:
    k: int = 7
    beta: float = 0.5
    alpha: float = 0.3
    eps: float = 0.07
    lambda_ub: float = 0.05
    rho: float = 0.15
    radius: float = 0.04
    fusion_mode: str = "multimodal-cost"
    max_outer: int = 25
    max_inner: int = 100
    tol: float = 1e-5
    window_len: float = 300.0
    fps: float = 1.0
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> "RunConfig":
        t = self.train
        checks = [
            (isinstance(self.k, int) and self.k >= 1, f"k must be an integer >= 1, got {self.k}"),
            (0.0 <= self.beta <= 1.0, f"beta must lie in [0, 1], got {self.beta}"),
            (self.alpha >= 0, f"alpha must be >= 0, got {self.alpha}"),
            (self.eps > 0, f"eps must be > 0, got {self.eps}"),
            (self.lambda_ub >= 0, f"lambda_ub must be >= 0, got {self.lambda_ub}"),
            (self.rho >= 0, f"rho must be >= 0, got {self.rho}"),
            (0 < self.radius <= 1, f"radius must lie in (0, 1], got {self.radius}"),
            (self.fusion_mode in FUSION_MODES, f"unknown fusion_mode {self.fusion_mode!r}"),
            (self.max_outer >= 1, f"max_outer must be >= 1, got {self.max_outer}"),
            (self.max_inner >= 1, f"max_inner must be >= 1, got {self.max_inner}"),
            (self.tol > 0, f"tol must be > 0, got {self.tol}"),
            (self.window_len > 0, f"window_len must be > 0, got {self.window_len}"),
            (self.fps > 0, f"fps must be > 0, got {self.fps}"),
            (t.epochs >= 0, f"epochs must be >= 0, got {t.epochs}"),
            (t.steps_per_epoch >= 1, f"steps_per_epoch must be >= 1, got {t.steps_per_epoch}"),
            (t.learning_rate > 0, f"learning_rate must be > 0, got {t.learning_rate}"),
            (t.temperature > 0, f"temperature must be > 0, got {t.temperature}"),
            (t.latent_dim >= 1, f"latent_dim must be >= 1, got {t.latent_dim}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "RunConfig":
        """Copy with top-level or training fields changed (flat names)."""
        return _apply(self.to_dict(), changes)


_TOP = {f.name: f.type for f in dataclasses.fields(RunConfig) if f.name != "train"}
_TRAIN = {f.name for f in dataclasses.fields(TrainConfig)}
_INT_FIELDS = {"k", "max_outer", "max_inner", "epochs", "steps_per_epoch", "latent_dim", "seed"}


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return value
    try:
        if key in _INT_FIELDS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if key == "hard_labels":
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes")
            return bool(value)
        if key == "fusion_mode":
            return str(value)
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {key}: {value!r}") from exc


def _apply(doc: dict[str, Any], overrides: dict[str, Any]) -> RunConfig:
    top: dict[str, Any] = {}
    train: dict[str, Any] = dict(doc.get("train") or {})
    for key, value in doc.items():
        if key == "train":
            continue
        if key not in _TOP:
            raise ConfigError(f"unknown config field {key!r}")
        top[key] = value
    for key, value in overrides.items():
        if value is None:
            continue
        if key in _TOP:
            top[key] = value
        elif key in _TRAIN:
            train[key] = value
        else:
            raise ConfigError(f"unknown override {key!r}")
    unknown = set(train) - _TRAIN
    if unknown:
        raise ConfigError(f"unknown train fields {sorted(unknown)}")
    top = {k: _coerce(k, v) for k, v in top.items()}
    train = {k: _coerce(k, v) for k, v in train.items()}
    return RunConfig(train=TrainConfig(**train), **top).validate()


def resolve_config(doc: dict[str, Any] | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Build a validated config from a parsed document and flat overrides.

    A ``"preset"`` key (in either source, override wins) supplies dataset
    defaults such as ``k``; explicit values beat the preset.
    """
    doc = dict(doc or {})
    overrides = dict(overrides or {})
    preset = overrides.pop("preset", None) or doc.pop("preset", None)
    doc.pop("preset", None)
    base: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        base.update(PRESETS[preset])
    base.update(doc)
    if "k" not in base and overrides.get("k") is None:
        raise ConfigError("k is required when no dataset preset is given")
    return _apply(base, overrides)


def load_config(path=None, overrides: dict[str, Any] | None = None) -> RunConfig:
    doc: dict[str, Any] = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    return resolve_config(doc, overrides)
