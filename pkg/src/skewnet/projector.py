"""Dense auto-encoder whose encoder projects flow records to a small latent space."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import checkpoint
from .engine import AdamState, Dense, Sequential, adam_step, minibatches
from .engine.loss import mse, mse_grad
from .errors import ConfigError, DataError, DimensionError
from .rng import stream


@dataclass
class ProjectorConfig:
    latent_dim: int = 8
    hidden: tuple[int, ...] = (64,)
    epochs: int = 30
    batch_size: int = 256
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.latent_dim < 1 or self.epochs < 1 or self.batch_size < 1 or any(h < 1 for h in self.hidden):
            raise ConfigError("projector sizes, epochs and batch size must be positive")
        if not self.lr > 0:
            raise ConfigError("learning rate must be positive")


@dataclass
class AutoencoderModel:
    """Encoder ``d -> hidden... -> latent`` (linear latent) and its mirror.

    ReLU everywhere except the latent and reconstruction layers, which are
    linear.
    """

    encoder: Sequential
    decoder: Sequential
    input_dim: int
    latent_dim: int
    hidden: tuple[int, ...] = ()
    loss_history: list[float] = field(default_factory=list)

    def parameters(self) -> dict[str, np.ndarray]:
        enc = {f"enc.{k}": v for k, v in self.encoder.parameters().items()}
        dec = {f"dec.{k}": v for k, v in self.decoder.parameters().items()}
        return {**enc, **dec}

    def save(self, path: str | Path) -> Path:
        header = {
            "input_dim": str(self.input_dim),
            "latent_dim": str(self.latent_dim),
            "hidden": json.dumps(list(self.hidden)),
        }
        return checkpoint.save(path, "AE", header, self.parameters())

    @classmethod
    def load(cls, path: str | Path) -> "AutoencoderModel":
        kind, header, tensors = checkpoint.load(path)
        if kind != "AE":
            raise DataError(f"checkpoint kind {kind!r} is not an auto-encoder")
        model = build_autoencoder(int(header["input_dim"]), int(header["latent_dim"]), json.loads(header["hidden"]))
        checkpoint.assign(model.parameters(), tensors)
        return model


def build_autoencoder(input_dim: int, latent_dim: int, hidden: Sequence[int] = (64,), seed: int = 0) -> AutoencoderModel:
    if input_dim < 1 or latent_dim < 1:
        raise ConfigError("auto-encoder dimensions must be positive")
    rng = stream(seed, "build_autoencoder")
    hidden = tuple(int(h) for h in hidden)
    enc_layers, width = [], input_dim
    for h in hidden:
        enc_layers.append(Dense(width, h, "relu", rng=rng))
        width = h
    enc_layers.append(Dense(width, latent_dim, "linear", rng=rng))
    dec_layers, width = [], latent_dim
    for h in reversed(hidden):
        dec_layers.append(Dense(width, h, "relu", rng=rng))
        width = h
    dec_layers.append(Dense(width, input_dim, "linear", rng=rng))
    return AutoencoderModel(Sequential(enc_layers), Sequential(dec_layers), input_dim, latent_dim, hidden)


def _check_width(model: AutoencoderModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.input_dim:
        raise DimensionError(f"auto-encoder expects [N x {model.input_dim}], got {features.shape}")
    return features


def encode(model: AutoencoderModel, features: np.ndarray, batch_size: int = 8192) -> np.ndarray:
    features = _check_width(model, features)
    out = np.empty((features.shape[0], model.latent_dim))
    for idx in minibatches(features.shape[0], batch_size):
        out[idx] = model.encoder.forward(features[idx])
    return out


def decode(model: AutoencoderModel, latent: np.ndarray) -> np.ndarray:
    return model.decoder.forward(np.asarray(latent, dtype=np.float64))


def reconstruction_error(model: AutoencoderModel, features: np.ndarray) -> float:
    """Mean over every element of ``(x - decode(encode(x)))^2``."""
    features = _check_width(model, features)
    return mse(decode(model, encode(model, features)), features)


def train_autoencoder(features: np.ndarray, config: ProjectorConfig | None = None) -> AutoencoderModel:
    """Fit by minibatch Adam on mean squared reconstruction error."""
    config = config or ProjectorConfig()
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DimensionError("features must be a 2-D matrix")
    n, d = features.shape
    if config.latent_dim >= d:
        raise ConfigError(f"latent_dim {config.latent_dim} does not reduce input width {d}")
    if n < config.batch_size:
        raise DataError(f"{n} rows is fewer than the batch size {config.batch_size}")
    if not np.all(np.isfinite(features)):
        raise DataError("non-finite feature values")

    model = build_autoencoder(d, config.latent_dim, config.hidden, seed=config.seed)
    params = model.parameters()
    state = AdamState(lr=config.lr)
    rng = stream(config.seed, "train_autoencoder", "shuffle")
    model.loss_history = [reconstruction_error(model, features)]
    for _ in range(config.epochs):
        total = 0.0
        for idx in minibatches(n, config.batch_size, rng):
            x = features[idx]
            recon = model.decoder.forward(model.encoder.forward(x, train=True), train=True)
            total += mse(recon, x) * len(idx)
            dz = model.decoder.backward(mse_grad(recon, x))
            model.encoder.backward(dz)
            grads = {f"enc.{k}": v for k, v in model.encoder.gradients().items()}
            grads.update({f"dec.{k}": v for k, v in model.decoder.gradients().items()})
            adam_step(params, grads, state)
        model.loss_history.append(total / n)
    return model
