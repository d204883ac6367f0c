"""End-to-end runner for the three experiment variants.

* ``E1``: clean, sample, scale, split, auto-encode, train with unit weights.
* ``E2``: ``E1`` plus capped VAE augmentation of the training split.
* ``E3``: ``E2`` plus class weights (explicit or searched).

The held-out test split is never augmented and never used to fit the
scaler, the auto-encoder or any VAE. The auto-encoder is fitted on the
un-augmented training split and shared by all variants, so ``E1`` comes out
the same whether or not the other variants run.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .classifiers import ArchitectureSpec, ClassifierModel, TrainConfig, build_classifier, predict, train_classifier
from .config import ExperimentConfig
from .data import (
    Dataset,
    Scaler,
    clean,
    fit_scaler,
    generate_synthetic_benchmark,
    invert_scaler,
    load_csv,
    sample_per_class,
    scale_dataset,
    stratified_split,
)
from .engine import ClassWeights
from .errors import ConfigError, DataError
from .metrics import MetricsReport, emit_report, evaluate_predictions
from .projector import encode, train_autoencoder
from .rng import derive_seed
from .synthesizer import AugmentationPlan, VaeModel, augment_dataset, make_plan, train_vae
from .weighting import SearchTrace, search_class_weights

log = logging.getLogger(__name__)

RESULT_FORMAT = "skewnet-experiment/1"


@dataclass
class Prepared:
    """Scaled train/test splits in the original feature space."""

    train: Dataset
    test: Dataset
    scaler: Scaler


@dataclass
class ExperimentResult:
    reports: dict[str, MetricsReport]
    provenance: dict[str, str]
    weights: dict[str, dict[str, float]] = field(default_factory=dict)
    hygiene: dict[str, bool] = field(default_factory=dict)
    search_trace: SearchTrace | None = None
    models: dict[str, ClassifierModel] = field(default_factory=dict)
    test_hashes: dict[str, np.ndarray] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def serialize(self) -> str:
        """Deterministic text form: provenance, weights, then one machine report per variant."""
        lines = [f"format = {RESULT_FORMAT}"]
        for key in sorted(self.provenance):
            lines.append(f"provenance.{key} = {self.provenance[key]}")
        for variant in sorted(self.weights):
            for name, w in self.weights[variant].items():
                lines.append(f"weights.{variant}.{name} = {w!r}")
        for key in sorted(self.hygiene):
            lines.append(f"hygiene.{key} = {str(self.hygiene[key]).lower()}")
        for variant in sorted(self.reports):
            lines.append(f"[{variant}]")
            lines.append(emit_report(self.reports[variant], "machine").rstrip("\n"))
        return "\n".join(lines) + "\n"

    def tables(self) -> str:
        return "".join(f"== {v} ==\n{emit_report(self.reports[v], 'table')}" for v in sorted(self.reports))


# ---------------------------------------------------------------- stages

def load_source(config: ExperimentConfig) -> Dataset:
    if config.synth is not None:
        data = generate_synthetic_benchmark(config.synth)
    elif config.csv_path is not None:
        if not config.csv_path.exists():
            raise ConfigError(f"dataset file not found: {config.csv_path}")
        data = load_csv(config.csv_path, config.schema)
    else:
        raise ConfigError("no dataset source configured")
    return data


def prepare(config: ExperimentConfig, data: Dataset | None = None) -> Prepared:
    """Clean, cap per class, split, and min-max scale (fitted on train only)."""
    data = load_source(config) if data is None else data
    data = clean(data, config.schema)
    if config.sampling_caps:
        data = sample_per_class(data, config.sampling_caps, derive_seed(config.seed, "sample"))
    train, test = stratified_split(data, config.split_fraction, derive_seed(config.seed, "split"))
    scaler = fit_scaler(train.features)
    return Prepared(scale_dataset(scaler, train), scale_dataset(scaler, test), scaler)


def build_plans(config: ExperimentConfig, train: Dataset) -> list[AugmentationPlan]:
    return [make_plan(train, p.target_class, fraction=p.fraction, count=p.count) for p in config.plans]


def train_vaes(config: ExperimentConfig, train: Dataset, plans) -> dict[str, VaeModel]:
    vaes = {}
    for plan in plans:
        rows = train.features[train.labels == train.class_index(plan.target_class)]
        cfg = config.vae_config(seed=derive_seed(config.seed, "vae", plan.target_class))
        vaes[plan.target_class] = train_vae(rows, cfg)
    return vaes


def augment_latent(config: ExperimentConfig, latent_train: Dataset, plans) -> tuple[Dataset, dict[str, VaeModel]]:
    """Non-standard order: VAEs see rescaled latent vectors instead of raw features."""
    latent_scaler = fit_scaler(latent_train.features)
    scaled = scale_dataset(latent_scaler, latent_train)
    vaes = train_vaes(config, scaled, plans)
    augmented = augment_dataset(scaled, plans, vaes, derive_seed(config.seed, "augment"))
    real = augmented.synthetic == False  # noqa: E712
    feats = augmented.features.copy()
    feats[real] = latent_train.features
    feats[~real] = invert_scaler(latent_scaler, augmented.features[~real])
    return augmented.with_features(feats, latent_train.feature_names), vaes


def make_trainer(spec: ArchitectureSpec, train_config: TrainConfig, init_seed: int):
    """Deterministic train-then-evaluate closure for the weight search."""

    def trainer(train: Dataset, validation: Dataset, weights: ClassWeights) -> MetricsReport:
        model = build_classifier(spec, seed=init_seed, class_names=train.class_names)
        train_classifier(model, train, weights, train_config)
        _, labels = predict(model, validation.features)
        return evaluate_predictions(validation.labels, labels, train.class_names)

    return trainer


def search_split(config: ExperimentConfig, train: Dataset) -> tuple[Dataset, Dataset]:
    """Hold out real rows for validation; synthetic rows only ever join the fit part."""
    real = train.subset(np.flatnonzero(~train.synthetic))
    synthetic = train.subset(np.flatnonzero(train.synthetic))
    fit, val = stratified_split(real, config.validation_fraction, derive_seed(config.seed, "search-split"))
    if len(synthetic):
        fit = Dataset.concat([fit, synthetic])
    return fit, val


def resolve_weights(
    config: ExperimentConfig, spec: ArchitectureSpec, train: Dataset, init_seed: int
) -> tuple[ClassWeights, SearchTrace | None]:
    if config.explicit_weights is not None:
        return ClassWeights.from_mapping(config.explicit_weights, train.class_names), None
    search_cfg = TrainConfig.from_dict({**config.train, **config.search_train}, seed=derive_seed(config.seed, "search"))
    fit, val = search_split(config, train)
    trainer = make_trainer(spec, search_cfg, init_seed)
    return search_class_weights(fit, val, config.minority_classes, config.search, trainer)


def _evaluate(model: ClassifierModel, test: Dataset) -> MetricsReport:
    _, labels = predict(model, test.features)
    return evaluate_predictions(test.labels, labels, test.class_names)


# ---------------------------------------------------------------- runner

def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    self_check: bool = False,
    data: Dataset | None = None,
) -> ExperimentResult:
    """Run every requested variant on one shared split and auto-encoder.

    With ``out_dir``, checkpoints and reports are written there under fixed
    names. ``self_check`` asserts split hygiene before returning.
    """
    out = Path(out_dir) if out_dir is not None else None
    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    prepared = prepare(config, data)
    train, test = prepared.train, prepared.test
    for name in config.minority_classes:
        train.class_index(name)
    timings["prepare"] = time.perf_counter() - t0

    t = time.perf_counter()
    ae = train_autoencoder(train.features, config.projector)
    timings["autoencoder"] = time.perf_counter() - t

    def to_latent(ds: Dataset) -> Dataset:
        return ds.with_features(encode(ae, ds.features))

    latent_train = to_latent(train)
    latent_test = to_latent(test)

    needs_aug = bool({"E2", "E3"} & set(config.variants))
    vaes: dict[str, VaeModel] = {}
    latent_aug = None
    aug_source = None
    if needs_aug:
        t = time.perf_counter()
        plans = build_plans(config, train)
        if config.stage_order == "augment-then-encode":
            vaes = train_vaes(config, train, plans)
            aug_source = augment_dataset(train, plans, vaes, derive_seed(config.seed, "augment"))
            latent_aug = to_latent(aug_source)
        else:
            latent_aug, vaes = augment_latent(config, latent_train, plans)
            aug_source = latent_aug
        timings["augmentation"] = time.perf_counter() - t

    spec = ArchitectureSpec(config.kind, config.projector.latent_dim, train.n_classes, config.hidden, config.dropout)
    init_seed = derive_seed(config.seed, "classifier-init")
    train_cfg = config.train_config(seed=derive_seed(config.seed, "classifier-train"))

    reports: dict[str, MetricsReport] = {}
    models: dict[str, ClassifierModel] = {}
    weights_used: dict[str, dict[str, float]] = {}
    trace = None
    for variant in config.variants:
        t = time.perf_counter()
        if variant == "E1":
            fit_set, weights = latent_train, ClassWeights.uniform(train.n_classes)
        elif variant == "E2":
            fit_set, weights = latent_aug, ClassWeights.uniform(train.n_classes)
        else:
            fit_set = latent_aug
            weights, trace = resolve_weights(config, spec, latent_aug, init_seed)
        model = build_classifier(spec, seed=init_seed, class_names=train.class_names)
        train_classifier(model, fit_set, weights, train_cfg)
        models[variant] = model
        reports[variant] = _evaluate(model, latent_test)
        weights_used[variant] = weights.to_mapping(train.class_names)
        timings[variant] = time.perf_counter() - t

    provenance = {
        "seed": str(config.seed),
        "config_hash": config.config_hash(),
        "architecture": config.kind,
        "stage_order": config.stage_order,
        "nonstandard": str(config.nonstandard).lower(),
        "train_rows": str(len(train)),
        "test_rows": str(len(test)),
    }
    if latent_aug is not None:
        provenance["augmented_train_rows"] = str(len(latent_aug))

    test_hashes = {v: test.row_hashes() for v in config.variants}
    hygiene = check_hygiene(test_hashes, test, aug_source)
    if self_check and not all(hygiene.values()):
        failed = [k for k, ok in hygiene.items() if not ok]
        raise DataError(f"split hygiene violated: {failed}")

    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        ae.save(out / "ae.skwn")
        provenance["checkpoint.ae"] = "ae.skwn"
        for cls, vae in sorted(vaes.items()):
            name = f"vae_{cls}.skwn"
            vae.save(out / name, {"class": cls})
            provenance[f"checkpoint.vae.{cls}"] = name
        for variant, model in models.items():
            name = f"{variant}_{config.kind}.skwn"
            model.save(out / name)
            provenance[f"checkpoint.{variant}"] = name

    result = ExperimentResult(
        reports, provenance, weights_used, hygiene, trace, models, test_hashes, timings
    )
    if out is not None:
        (out / "result.txt").write_text(result.serialize(), encoding="utf-8")
        if trace is not None:
            (out / "search_trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    return result


def check_hygiene(test_hashes: Mapping[str, np.ndarray], test: Dataset, augmented: Dataset | None) -> dict[str, bool]:
    variants = list(test_hashes)
    first = test_hashes[variants[0]]
    same = all(np.array_equal(np.sort(first), np.sort(test_hashes[v])) for v in variants[1:])
    no_synth_flag = not bool(test.synthetic.any())
    no_synth_rows = True
    if augmented is not None and augmented.synthetic.any():
        synth_hashes = set(augmented.subset(np.flatnonzero(augmented.synthetic)).row_hashes().tolist())
        no_synth_rows = synth_hashes.isdisjoint(first.tolist())
    return {
        "test_rows_identical": bool(same),
        "test_has_no_synthetic_flag": no_synth_flag,
        "test_disjoint_from_synthetic": bool(no_synth_rows),
    }


def minority_majority_f1(report: MetricsReport, minority: list[str]) -> tuple[float, float]:
    mino = [report.f1_of(c) for c in minority]
    majo = [report.f1_of(c) for c in report.class_names if c not in minority]
    return float(np.mean(mino)), float(np.mean(majo))
