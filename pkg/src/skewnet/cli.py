"""``skewnet`` command line: one subcommand per pipeline stage plus ``experiment``.

Stages hand data to each other through files in ``--out``; every artifact
name is fixed so a rerun with the same config and seed overwrites the same
files with identical bytes. ``preprocess`` writes ``manifest.json`` next to
its splits, pinning the class order that later stages read back.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .classifiers import ArchitectureSpec, ClassifierModel, build_classifier, predict, train_classifier
from .config import ExperimentConfig, load_config, parse_config
from .data import (
    Dataset,
    DatasetSchema,
    clean,
    fit_scaler,
    generate_synthetic_benchmark,
    load_csv,
    sample_per_class,
    scale_dataset,
    stratified_split,
    write_csv,
    write_reject_log,
)
from .engine import ClassWeights
from .errors import ConfigError, DataError, SkewnetError
from .experiment import build_plans, load_source, run_experiment, search_split, make_trainer
from .metrics import emit_report, evaluate_predictions
from .projector import AutoencoderModel, encode, train_autoencoder
from .rng import derive_seed
from .synthesizer import VaeModel, augment_dataset, train_vae
from .weighting import search_class_weights

log = logging.getLogger("skewnet")

SYNTHETIC_COLUMN = "synthetic"
DEFAULT_CONFIG = {"dataset": {"synth": "botiot-mini"}, "variants": ["E1"]}


# ---------------------------------------------------------------- helpers

def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config(DEFAULT_CONFIG)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _schema_for(path: Path, cfg: ExperimentConfig) -> DatasetSchema:
    """Pin the class order from a sibling manifest when one exists."""
    manifest = path.parent / "manifest.json"
    if manifest.exists():
        meta = json.loads(manifest.read_text(encoding="utf-8"))
        return DatasetSchema(label=meta.get("label", "label"), classes=tuple(meta["classes"]))
    return cfg.schema


def _read(path: str | Path, cfg: ExperimentConfig) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    return load_csv(path, _schema_for(path, cfg), synthetic_column=SYNTHETIC_COLUMN)


def _label(cfg: ExperimentConfig) -> str:
    return cfg.schema.label


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _counts_text(data: Dataset) -> str:
    return "".join(f"{name} = {n}\n" for name, n in data.class_counts().items())


def _spec(cfg: ExperimentConfig, data: Dataset) -> ArchitectureSpec:
    return ArchitectureSpec(cfg.kind, data.n_features, data.n_classes, cfg.hidden, cfg.dropout)


def _weights_from(args, cfg: ExperimentConfig, data: Dataset) -> ClassWeights:
    if args.weights:
        path = Path(args.weights)
        if not path.exists():
            raise DataError(f"weights file not found: {path}")
        return ClassWeights.from_mapping(json.loads(path.read_text(encoding="utf-8")), data.class_names)
    if cfg.explicit_weights is not None:
        return ClassWeights.from_mapping(cfg.explicit_weights, data.class_names)
    return ClassWeights.uniform(data.n_classes)


# ---------------------------------------------------------------- subcommands

def cmd_synth_data(args) -> int:
    cfg = _config(args)
    if cfg.synth is None:
        raise ConfigError("synth-data needs a config whose dataset is a synthetic spec")
    data = generate_synthetic_benchmark(cfg.synth)
    write_csv(data, _out(args) / "data.csv", _label(cfg))
    _emit(_counts_text(data))
    return 0


def cmd_preprocess(args) -> int:
    cfg = _config(args)
    out = _out(args)
    if args.input and not Path(args.input).exists():
        raise DataError(f"input file not found: {args.input}")
    data = load_csv(args.input, cfg.schema) if args.input else load_source(cfg)
    if data.rejects:
        write_reject_log(data, out / "rejects.log")
    data = clean(data, cfg.schema)
    if cfg.sampling_caps:
        data = sample_per_class(data, cfg.sampling_caps, derive_seed(cfg.seed, "sample"))
    train, test = stratified_split(data, cfg.split_fraction, derive_seed(cfg.seed, "split"))
    scaler = fit_scaler(train.features)
    write_csv(scale_dataset(scaler, train), out / "train.csv", _label(cfg))
    write_csv(scale_dataset(scaler, test), out / "test.csv", _label(cfg))
    (out / "scaler.json").write_text(json.dumps(scaler.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    manifest = {"label": _label(cfg), "classes": data.class_names, "features": data.feature_names}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    _emit(f"train_rows = {len(train)}\ntest_rows = {len(test)}\nrejected_rows = {len(data.rejects)}\n")
    return 0


def cmd_train_ae(args) -> int:
    cfg = _config(args)
    out = _out(args)
    train = _read(args.train or out / "train.csv", cfg)
    ae = train_autoencoder(train.features, cfg.projector)
    ae.save(out / "ae.skwn")
    _emit(f"latent_dim = {ae.latent_dim}\nfinal_loss = {ae.loss_history[-1]!r}\n")
    return 0


def cmd_encode(args) -> int:
    cfg = _config(args)
    out = _out(args)
    ae = AutoencoderModel.load(args.ae or out / "ae.skwn")
    inputs = args.input or [p for p in (out / "train.csv", out / "test.csv", out / "train_aug.csv") if p.exists()]
    if not inputs:
        raise DataError("nothing to encode; pass --input")
    for path in map(Path, inputs):
        data = _read(path, cfg)
        latent = data.with_features(encode(ae, data.features))
        target = out / f"{path.stem}.latent.csv"
        write_csv(latent, target, _label(cfg), SYNTHETIC_COLUMN if latent.synthetic.any() else None)
        _emit(f"{path.name} -> {target.name}")
    return 0


def cmd_train_vae(args) -> int:
    cfg = _config(args)
    out = _out(args)
    train = _read(args.train or out / "train.csv", cfg)
    plans = build_plans(cfg, train)
    wanted = set(args.target_class or [p.target_class for p in plans])
    for name in sorted(wanted):
        k = train.class_index(name)
        rows = train.features[train.labels == k]
        vae = train_vae(rows, cfg.vae_config(seed=derive_seed(cfg.seed, "vae", name)))
        vae.save(out / f"vae_{name}.skwn", {"class": name})
        _emit(f"vae_{name}.skwn rows = {len(rows)} final_loss = {vae.loss_history[-1]!r}")
    return 0


def cmd_augment(args) -> int:
    cfg = _config(args)
    out = _out(args)
    train = _read(args.train or out / "train.csv", cfg)
    plans = build_plans(cfg, train)
    vae_dir = Path(args.vae_dir) if args.vae_dir else out
    vaes: dict[str, VaeModel] = {}
    for plan in plans:
        path = vae_dir / f"vae_{plan.target_class}.skwn"
        if not path.exists():
            raise DataError(f"missing VAE checkpoint {path}; run train-vae first")
        vaes[plan.target_class], _ = VaeModel.load(path)
    augmented = augment_dataset(train, plans, vaes, derive_seed(cfg.seed, "augment"))
    write_csv(augmented, out / "train_aug.csv", _label(cfg), SYNTHETIC_COLUMN)
    _emit("".join(f"{p.target_class} = {p.original_count} + {p.n}\n" for p in plans))
    return 0


def cmd_search_weights(args) -> int:
    cfg = _config(args)
    out = _out(args)
    if cfg.search is None:
        raise ConfigError("search-weights needs a 'weights.search' section in the config")
    train = _read(args.train or out / "train_aug.latent.csv", cfg)
    spec = _spec(cfg, train)
    search_cfg = cfg.train_config(seed=derive_seed(cfg.seed, "search"), **cfg.search_train)
    fit, val = search_split(cfg, train)
    trainer = make_trainer(spec, search_cfg, derive_seed(cfg.seed, "classifier-init"))
    weights, trace = search_class_weights(fit, val, cfg.minority_classes, cfg.search, trainer)
    mapping = weights.to_mapping(train.class_names)
    (out / "weights.json").write_text(json.dumps(mapping, indent=1) + "\n", encoding="utf-8")
    (out / "search_trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    _emit("".join(f"{k} = {v!r}\n" for k, v in mapping.items()) + f"truncated = {str(trace.truncated).lower()}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out(args)
    train = _read(args.train or out / "train.latent.csv", cfg)
    weights = _weights_from(args, cfg, train)
    model = build_classifier(_spec(cfg, train), seed=derive_seed(cfg.seed, "classifier-init"), class_names=train.class_names)
    _, history = train_classifier(model, train, weights, cfg.train_config(seed=derive_seed(cfg.seed, "classifier-train")))
    name = f"classifier_{cfg.kind}.skwn"
    model.save(out / name)
    _emit(f"{name} initial_loss = {history.initial_loss!r} final_loss = {history.train_loss[-1]!r}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    out = _out(args)
    model = ClassifierModel.load(args.model or out / f"classifier_{cfg.kind}.skwn")
    test = _read(args.test or out / "test.latent.csv", cfg)
    if test.class_names != model.class_names:
        raise DataError("test classes do not match the model's class registry")
    _, labels = predict(model, test.features)
    report = evaluate_predictions(test.labels, labels, model.class_names)
    (out / "report.txt").write_text(emit_report(report, "machine"), encoding="utf-8")
    _emit(emit_report(report, args.format))
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    out = _out(args)
    result = run_experiment(cfg, out, self_check=args.self_check)
    if args.format == "machine":
        _emit(result.serialize())
    else:
        if cfg.nonstandard:
            _emit(f"NOTE: non-standard stage order ({cfg.stage_order})")
        _emit(result.tables())
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", default="skewnet-out", help="artifact directory (default: %(default)s)")
    common.add_argument("--format", choices=("table", "machine"), default="table", help="report format on stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="skewnet", description="Imbalanced flow-record classification pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    add("synth-data", cmd_synth_data, "generate the configured synthetic benchmark as data.csv")
    p = add("preprocess", cmd_preprocess, "clean, cap, split and scale into train.csv / test.csv")
    p.add_argument("--input", help="raw CSV (default: the config's dataset)")
    p = add("train-ae", cmd_train_ae, "fit the auto-encoder on the scaled train split")
    p.add_argument("--train")
    p = add("encode", cmd_encode, "project CSVs into the auto-encoder latent space")
    p.add_argument("--ae")
    p.add_argument("--input", nargs="+")
    p = add("train-vae", cmd_train_vae, "fit one VAE per planned minority class")
    p.add_argument("--train")
    p.add_argument("--class", dest="target_class", action="append")
    p = add("augment", cmd_augment, "append capped synthetic rows to the train split")
    p.add_argument("--train")
    p.add_argument("--vae-dir")
    p = add("search-weights", cmd_search_weights, "search minority class weights on a validation split")
    p.add_argument("--train")
    p = add("train", cmd_train, "train a classifier on latent features")
    p.add_argument("--train")
    p.add_argument("--weights", help="JSON class-weight map (default: config weights or all ones)")
    p = add("evaluate", cmd_evaluate, "score a classifier checkpoint on a test CSV")
    p.add_argument("--model")
    p.add_argument("--test")
    p = add("experiment", cmd_experiment, "run the E1/E2/E3 protocol end to end")
    p.add_argument("--self-check", action="store_true", help="assert test-split hygiene across variants")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SkewnetError as exc:
        print(f"skewnet: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
