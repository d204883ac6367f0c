"""DNN and BLSTM flow classifiers trained on class-weighted cross-entropy."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import checkpoint
from .data import Dataset
from .engine import (
    LSTM,
    AdamState,
    ClassWeights,
    Dense,
    Dropout,
    FinalStates,
    Reshape,
    Sequential,
    adam_step,
    loss_and_grads,
    minibatches,
    weighted_cross_entropy,
)
from .errors import ConfigError, DataError, DimensionError, LabelError
from .rng import stream

log = logging.getLogger(__name__)

KINDS = ("DNN", "BLSTM")


@dataclass(frozen=True)
class ArchitectureSpec:
    kind: str
    input_dim: int
    n_classes: int
    hidden: tuple[int, ...] = (128, 64, 32, 16)
    dropout: tuple[float, float] = (0.30, 0.20)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "dropout", tuple(float(r) for r in self.dropout))
        if self.kind not in KINDS:
            raise ConfigError(f"architecture kind must be one of {KINDS}, got {self.kind!r}")
        if len(self.hidden) != 4:
            raise ConfigError(f"exactly four hidden layers are required, got {len(self.hidden)}")
        if len(self.dropout) != 2:
            raise ConfigError("dropout schedule needs two rates (after hidden 3 and hidden 4)")
        if self.input_dim < 1 or any(h < 1 for h in self.hidden):
            raise ConfigError("dimensions must be positive")
        if self.n_classes < 2:
            raise ConfigError("need at least two classes")

    def header(self) -> dict[str, str]:
        return {
            "input_dim": str(self.input_dim),
            "n_classes": str(self.n_classes),
            "hidden": json.dumps(list(self.hidden)),
            "dropout": json.dumps(list(self.dropout)),
        }

    @classmethod
    def from_header(cls, kind: str, header: dict[str, str]) -> "ArchitectureSpec":
        return cls(
            kind=kind,
            input_dim=int(header["input_dim"]),
            n_classes=int(header["n_classes"]),
            hidden=tuple(json.loads(header["hidden"])),
            dropout=tuple(json.loads(header["dropout"])),
        )


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 256
    lr: float = 1e-3
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be >= 1")
        if not self.lr > 0:
            raise ConfigError("learning rate must be positive")

    @classmethod
    def from_dict(cls, raw: dict | None, **overrides) -> "TrainConfig":
        merged = {**(raw or {}), **{k: v for k, v in overrides.items() if v is not None}}
        unknown = set(merged) - {"epochs", "batch_size", "lr", "seed", "shuffle"}
        if unknown:
            raise ConfigError(f"unknown train settings: {sorted(unknown)}")
        return cls(**merged)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    initial_loss: float = float("nan")


class ClassifierModel:
    """A built architecture plus the class registry it was trained against."""

    def __init__(self, spec: ArchitectureSpec, network: Sequential, class_names: Sequence[str] | None = None) -> None:
        self.spec = spec
        self.network = network
        self.class_names = list(class_names) if class_names is not None else [str(i) for i in range(spec.n_classes)]

    @property
    def layers(self):
        return self.network.layers

    def parameters(self) -> dict[str, np.ndarray]:
        return self.network.parameters()

    def loss_and_grads(self, batch):
        """``batch`` is an :class:`skewnet.engine.Batch`; used by gradient checks."""
        train = batch.dropout_seed is not None
        rng = np.random.default_rng(batch.dropout_seed) if train else None
        return loss_and_grads(self.network, batch.x, batch.targets, batch.weights, train=train, rng=rng)

    def save(self, path: str | Path) -> Path:
        header = {**self.spec.header(), "classes": json.dumps(self.class_names)}
        return checkpoint.save(path, self.spec.kind, header, self.parameters())

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        kind, header, tensors = checkpoint.load(path)
        if kind not in KINDS:
            raise DataError(f"checkpoint kind {kind!r} is not a classifier")
        model = build_classifier(ArchitectureSpec.from_header(kind, header), class_names=json.loads(header["classes"]))
        checkpoint.assign(model.parameters(), tensors)
        return model


def build_classifier(spec: ArchitectureSpec, seed: int = 0, class_names: Sequence[str] | None = None) -> ClassifierModel:
    """Four ReLU hidden layers, dropout after the third and fourth, softmax output.

    The BLSTM variant swaps the first hidden layer for a bidirectional LSTM
    that reads the ``d`` input features as ``d`` timesteps of one feature;
    its final forward and backward states (``2 * (h1 // 2)`` wide) feed the
    second hidden layer.
    """
    rng = stream(seed, "build_classifier", spec.kind)
    h1, h2, h3, h4 = spec.hidden
    layers = []
    if spec.kind == "DNN":
        layers.append(Dense(spec.input_dim, h1, "relu", rng=rng))
        width = h1
    else:
        hidden_size = max(1, h1 // 2)
        lstm = LSTM(1, hidden_size, "bidirectional", rng=rng)
        layers += [Reshape((spec.input_dim, 1)), lstm, FinalStates(hidden_size, bidirectional=True)]
        width = lstm.output_size
    layers += [
        Dense(width, h2, "relu", rng=rng),
        Dense(h2, h3, "relu", rng=rng),
        Dropout(spec.dropout[0]),
        Dense(h3, h4, "relu", rng=rng),
        Dropout(spec.dropout[1]),
        Dense(h4, spec.n_classes, "softmax", rng=rng),
    ]
    return ClassifierModel(spec, Sequential(layers), class_names)


def _check_inputs(model: ClassifierModel, features: np.ndarray, labels: np.ndarray | None = None) -> None:
    if features.ndim != 2 or features.shape[1] != model.spec.input_dim:
        raise DimensionError(f"model expects [N x {model.spec.input_dim}] features, got {features.shape}")
    if not np.all(np.isfinite(features)):
        raise DataError("non-finite feature values")
    if labels is not None and labels.size and (labels.min() < 0 or labels.max() >= model.spec.n_classes):
        raise LabelError(f"labels outside [0, {model.spec.n_classes})")


def _dataset_loss(model: ClassifierModel, data: Dataset, weights, batch_size: int = 4096) -> float:
    total = 0.0
    for idx in minibatches(len(data), batch_size):
        probs = model.network.forward(data.features[idx])
        total += weighted_cross_entropy(probs, data.labels[idx], weights) * len(idx)
    return total / max(len(data), 1)


def train_classifier(
    model: ClassifierModel,
    train: Dataset,
    weights: ClassWeights | None = None,
    config: TrainConfig | None = None,
    validation: Dataset | None = None,
) -> tuple[ClassifierModel, TrainHistory]:
    """Minibatch Adam on the class-weighted cross-entropy; deterministic given ``config.seed``."""
    config = config or TrainConfig()
    _check_inputs(model, train.features, train.labels)
    if weights is not None and len(weights) != model.spec.n_classes:
        raise ConfigError(f"{len(weights)} class weights for {model.spec.n_classes} classes")
    if train.class_names and len(train.class_names) == model.spec.n_classes:
        model.class_names = list(train.class_names)

    shuffle_rng = stream(config.seed, "train_classifier", "shuffle") if config.shuffle else None
    dropout_rng = stream(config.seed, "train_classifier", "dropout")
    state = AdamState(lr=config.lr)
    history = TrainHistory(initial_loss=_dataset_loss(model, train, weights))
    params = model.parameters()
    for epoch in range(config.epochs):
        total = 0.0
        for idx in minibatches(len(train), config.batch_size, shuffle_rng):
            loss, grads = loss_and_grads(
                model.network, train.features[idx], train.labels[idx], weights, train=True, rng=dropout_rng
            )
            adam_step(params, grads, state)
            total += loss * len(idx)
        history.train_loss.append(total / len(train))
        if validation is not None:
            history.val_loss.append(_dataset_loss(model, validation, weights))
        log.debug("epoch %d loss %.6f", epoch + 1, history.train_loss[-1])
    return model, history


def predict(model: ClassifierModel, features: np.ndarray, batch_size: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode probabilities and argmax labels."""
    features = np.asarray(features, dtype=np.float64)
    _check_inputs(model, features)
    out = np.empty((features.shape[0], model.spec.n_classes))
    for idx in minibatches(features.shape[0], batch_size):
        out[idx] = model.network.forward(features[idx], train=False)
    return out, np.argmax(out, axis=1)
