"""Experiment configuration: a single JSON document, validated up front.

See ``configs/botiot-mini.json`` for an annotated example. Unknown top-level
keys are rejected so typos fail loudly instead of silently using defaults.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .classifiers import KINDS, TrainConfig
from .data import DatasetSchema, SynthSpec, botiot_mini
from .errors import ConfigError
from .projector import ProjectorConfig
from .synthesizer import VaeConfig
from .weighting import WeightSearchConfig

CONFIG_VERSION = 1
VARIANTS = ("E1", "E2", "E3")
STAGE_ORDERS = ("augment-then-encode", "encode-then-augment")

_TOP_KEYS = {
    "version", "seed", "dataset", "schema", "sampling_caps", "split_fraction", "projector",
    "augmentation", "weights", "minority_classes", "architecture", "train", "variants",
    "stage_order", "comment",
}


@dataclass(frozen=True)
class PlanSpec:
    target_class: str
    fraction: float | None = None
    count: int | None = None

    def __post_init__(self) -> None:
        if self.fraction is None and self.count is None:
            raise ConfigError(f"plan for {self.target_class!r} needs 'fraction' or 'count'")


@dataclass
class ExperimentConfig:
    raw: dict[str, Any]
    seed: int = 0
    synth: SynthSpec | None = None
    csv_path: Path | None = None
    schema: DatasetSchema = field(default_factory=DatasetSchema)
    sampling_caps: dict[str, float] = field(default_factory=dict)
    split_fraction: float = 0.8
    projector: ProjectorConfig = field(default_factory=ProjectorConfig)
    plans: list[PlanSpec] = field(default_factory=list)
    vae: dict[str, Any] = field(default_factory=dict)
    explicit_weights: dict[str, float] | None = None
    search: WeightSearchConfig | None = None
    search_train: dict[str, Any] = field(default_factory=dict)
    validation_fraction: float = 0.8
    minority_classes: list[str] = field(default_factory=list)
    kind: str = "DNN"
    hidden: tuple[int, ...] = (128, 64, 32, 16)
    dropout: tuple[float, float] = (0.30, 0.20)
    train: dict[str, Any] = field(default_factory=dict)
    variants: tuple[str, ...] = ("E1", "E2", "E3")
    stage_order: str = "augment-then-encode"
    base_dir: Path | None = None

    @property
    def nonstandard(self) -> bool:
        return self.stage_order != "augment-then-encode"

    def train_config(self, **overrides) -> TrainConfig:
        return TrainConfig.from_dict({"seed": self.seed, **self.train}, **overrides)

    def vae_config(self, **overrides) -> VaeConfig:
        return VaeConfig.from_dict({"seed": self.seed, **self.vae}, **overrides)

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return parse_config({**self.raw, "seed": int(seed)}, base_dir=self.base_dir)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _dataset_source(raw: Any, seed: int, base_dir: Path | None) -> tuple[SynthSpec | None, Path | None]:
    _require(isinstance(raw, Mapping), "'dataset' must be an object with 'synth' or 'csv'")
    if "csv" in raw:
        path = Path(raw["csv"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return None, path
    synth = raw.get("synth")
    if isinstance(synth, str):
        _require(synth == "botiot-mini", f"unknown synthetic preset {synth!r}")
        opts = {k: v for k, v in raw.items() if k != "synth"}
        unknown = set(opts) - {"n_features", "separability", "n_factors", "minority_offset"}
        _require(not unknown, f"unknown botiot-mini options {sorted(unknown)}")
        return botiot_mini(seed=seed, **opts), None
    if isinstance(synth, Mapping):
        return SynthSpec.from_dict({"seed": seed, **synth}), None
    raise ConfigError("'dataset' needs 'synth' (preset name or spec) or 'csv'")


def parse_config(raw: Mapping[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a config mapping; every inconsistency raises :class:`ConfigError`."""
    raw = json.loads(json.dumps(raw))  # detach and normalise
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"unknown config keys {sorted(unknown)}")
    _require(int(raw.get("version", CONFIG_VERSION)) == CONFIG_VERSION, f"config version must be {CONFIG_VERSION}")
    seed = int(raw.get("seed", 0))
    _require(seed >= 0, "seed must be non-negative")
    _require("dataset" in raw, "config needs a 'dataset' section")
    synth, csv_path = _dataset_source(raw["dataset"], seed, base_dir)

    variants = tuple(raw.get("variants", VARIANTS))
    _require(bool(variants) and all(v in VARIANTS for v in variants), f"variants must be a non-empty subset of {VARIANTS}")
    _require(len(set(variants)) == len(variants), "duplicate variants")

    aug = raw.get("augmentation", {}) or {}
    plans = []
    for p in aug.get("plans", []):
        _require("class" in p, "each augmentation plan needs a 'class'")
        plans.append(PlanSpec(p["class"], p.get("fraction"), p.get("count")))
    _require(len({p.target_class for p in plans}) == len(plans), "duplicate augmentation plan classes")
    if {"E2", "E3"} & set(variants):
        _require(bool(plans), "variants E2/E3 require augmentation plans")

    weights_raw = raw.get("weights", {}) or {}
    explicit = weights_raw.get("explicit")
    search = None
    search_train = {}
    validation_fraction = 0.8
    if "search" in weights_raw:
        s = dict(weights_raw["search"])
        search_train = s.pop("train", {}) or {}
        validation_fraction = float(s.pop("validation_fraction", 0.8))
        search = WeightSearchConfig.from_dict(s)
    _require(explicit is None or search is None, "give explicit weights or a search config, not both")
    if "E3" in variants:
        _require(explicit is not None or search is not None, "variant E3 requires explicit weights or a search config")
    if explicit is not None:
        _require(all(float(v) >= 1 for v in explicit.values()), "explicit class weights must be >= 1")

    arch = raw.get("architecture", {}) or {}
    kind = arch.get("kind", "DNN")
    _require(kind in KINDS, f"architecture kind must be one of {KINDS}")

    stage_order = raw.get("stage_order", "augment-then-encode")
    _require(stage_order in STAGE_ORDERS, f"stage_order must be one of {STAGE_ORDERS}")

    split_fraction = float(raw.get("split_fraction", 0.8))
    _require(0.0 < split_fraction < 1.0, "split_fraction must lie in (0, 1)")
    _require(0.0 < validation_fraction < 1.0, "validation_fraction must lie in (0, 1)")

    proj = dict(raw.get("projector", {}) or {})
    proj.setdefault("seed", seed)
    try:
        projector = ProjectorConfig(**proj)
    except TypeError as exc:
        raise ConfigError(f"bad projector settings: {exc}") from None

    minority = list(raw.get("minority_classes", [p.target_class for p in plans]))
    if search is not None:
        _require(bool(minority), "weight search needs minority classes")

    cfg = ExperimentConfig(
        raw=raw,
        seed=seed,
        synth=synth,
        csv_path=csv_path,
        schema=DatasetSchema.from_dict(raw.get("schema", {}) or {}),
        sampling_caps={k: float(v) for k, v in (raw.get("sampling_caps", {}) or {}).items()},
        split_fraction=split_fraction,
        projector=projector,
        plans=plans,
        vae=dict(aug.get("vae", {}) or {}),
        explicit_weights=None if explicit is None else {k: float(v) for k, v in explicit.items()},
        search=search,
        search_train=search_train,
        validation_fraction=validation_fraction,
        minority_classes=minority,
        kind=kind,
        hidden=tuple(arch.get("hidden", (128, 64, 32, 16))),
        dropout=tuple(arch.get("dropout", (0.30, 0.20))),
        train=dict(raw.get("train", {}) or {}),
        variants=variants,
        stage_order=stage_order,
        base_dir=base_dir,
    )
    # surface bad train/VAE settings now rather than mid-run
    cfg.train_config()
    cfg.vae_config()
    if search is not None:
        TrainConfig.from_dict({"seed": seed, **cfg.train, **search_train})
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    _require(isinstance(raw, dict), "config root must be an object")
    return parse_config(raw, base_dir=path.parent)
