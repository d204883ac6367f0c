"""Per-class variational auto-encoders and capped minority augmentation.

The encoder treats a flow vector of width ``d`` as a one-channel signal of
length ``d``, runs two strided Conv1D layers over it, and emits the mean and
log-variance of a diagonal Gaussian over ``z``. The decoder maps ``z`` back
to ``[0, 1]^d`` through a sigmoid, so inputs are expected min-max scaled.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import checkpoint
from .data import Dataset
from .engine import AdamState, Conv1D, Dense, Flatten, Reshape, Sequential, adam_step, minibatches
from .errors import CapViolationError, ConfigError, DataError, DimensionError, NumericError
from .rng import stream


@dataclass(frozen=True)
class EncodedDistribution:
    mean: np.ndarray
    log_var: np.ndarray

    @property
    def variance(self) -> np.ndarray:
        return np.exp(self.log_var)


@dataclass(frozen=True)
class ElboBreakdown:
    reconstruction: float
    kl: float
    total: float


@dataclass
class VaeConfig:
    z_dim: int = 4
    channels: tuple[int, int] = (8, 16)
    kernel_len: int = 3
    stride: int = 2
    decoder_hidden: int = 32
    epochs: int = 1000
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0
    min_rows: int = 16

    def __post_init__(self) -> None:
        self.channels = tuple(int(c) for c in self.channels)
        if min(self.z_dim, self.kernel_len, self.stride, self.decoder_hidden, self.epochs, self.batch_size) < 1:
            raise ConfigError("VAE sizes, epochs and batch size must be positive")
        if not self.channels or min(self.channels) < 1:
            raise ConfigError("VAE needs at least one positive conv channel count")

    @classmethod
    def from_dict(cls, raw: Mapping | None, **overrides) -> "VaeConfig":
        merged = {**(raw or {}), **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(f"bad VAE settings: {exc}") from None


@dataclass
class VaeModel:
    body: Sequential
    mean_head: Dense
    log_var_head: Dense
    decoder: Sequential
    input_dim: int
    config: VaeConfig
    loss_history: list[float] = field(default_factory=list)

    @property
    def z_dim(self) -> int:
        return self.config.z_dim

    def parameters(self) -> dict[str, np.ndarray]:
        out = {f"enc.{k}": v for k, v in self.body.parameters().items()}
        out.update({f"mu.{k}": v for k, v in self.mean_head.params.items()})
        out.update({f"logvar.{k}": v for k, v in self.log_var_head.params.items()})
        out.update({f"dec.{k}": v for k, v in self.decoder.parameters().items()})
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {f"enc.{k}": v for k, v in self.body.gradients().items()}
        out.update({f"mu.{k}": v for k, v in self.mean_head.grads.items()})
        out.update({f"logvar.{k}": v for k, v in self.log_var_head.grads.items()})
        out.update({f"dec.{k}": v for k, v in self.decoder.gradients().items()})
        return out

    def encode(self, x: np.ndarray) -> EncodedDistribution:
        x = self._check(x)
        h = self.body.forward(x)
        return EncodedDistribution(self.mean_head.forward(h), self.log_var_head.forward(h))

    def decode(self, z: np.ndarray) -> np.ndarray:
        return self.decoder.forward(np.atleast_2d(np.asarray(z, dtype=np.float64)))

    def _check(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise DimensionError(f"VAE expects width {self.input_dim}, got {x.shape[1]}")
        return x

    def loss_and_grads(self, batch: tuple[np.ndarray, np.ndarray]) -> tuple[float, dict[str, np.ndarray]]:
        """Negative ELBO and its gradients for ``(x, noise)``; noise fixes the sample."""
        x, noise = batch
        x = self._check(x)
        n = x.shape[0]
        h = self.body.forward(x, train=True)
        dist = EncodedDistribution(self.mean_head.forward(h), self.log_var_head.forward(h))
        std = np.exp(0.5 * dist.log_var)
        z = dist.mean + std * noise
        recon = self.decoder.forward(z, train=True)
        parts = elbo_loss(x, recon, dist)
        if not math.isfinite(parts.total):
            raise NumericError("negative ELBO is not finite")
        dz = self.decoder.backward(2.0 * (recon - x) / n)
        d_mean = dz + dist.mean / n
        d_log_var = dz * noise * 0.5 * std + 0.5 * (np.exp(dist.log_var) - 1.0) / n
        dh = self.mean_head.backward(d_mean) + self.log_var_head.backward(d_log_var)
        self.body.backward(dh)
        return parts.total, self.gradients()

    def save(self, path: str | Path, header: Mapping[str, str] | None = None) -> Path:
        c = self.config
        meta = {
            "input_dim": str(self.input_dim),
            "z_dim": str(c.z_dim),
            "channels": json.dumps(list(c.channels)),
            "kernel_len": str(c.kernel_len),
            "stride": str(c.stride),
            "decoder_hidden": str(c.decoder_hidden),
            **(header or {}),
        }
        return checkpoint.save(path, "VAE", meta, self.parameters())

    @classmethod
    def load(cls, path: str | Path) -> tuple["VaeModel", dict[str, str]]:
        kind, header, tensors = checkpoint.load(path)
        if kind != "VAE":
            raise DataError(f"checkpoint kind {kind!r} is not a VAE")
        cfg = VaeConfig(
            z_dim=int(header["z_dim"]),
            channels=tuple(json.loads(header["channels"])),
            kernel_len=int(header["kernel_len"]),
            stride=int(header["stride"]),
            decoder_hidden=int(header["decoder_hidden"]),
        )
        model = build_vae(int(header["input_dim"]), cfg)
        checkpoint.assign(model.parameters(), tensors)
        return model, header


def build_vae(input_dim: int, config: VaeConfig | None = None) -> VaeModel:
    config = config or VaeConfig()
    if input_dim < 1:
        raise ConfigError("VAE input width must be positive")
    rng = stream(config.seed, "build_vae")
    layers: list = [Reshape((1, input_dim))]
    channels_in, length = 1, input_dim
    for ch in config.channels:
        conv = Conv1D(channels_in, ch, config.kernel_len, config.stride, "same", "relu", rng=rng)
        layers.append(conv)
        length = conv.output_length(length)
        channels_in = ch
    layers.append(Flatten())
    flat = channels_in * length
    mean_head = Dense(flat, config.z_dim, "linear", rng=rng)
    log_var_head = Dense(flat, config.z_dim, "linear", rng=rng)
    decoder = Sequential([
        Dense(config.z_dim, config.decoder_hidden, "relu", rng=rng),
        Dense(config.decoder_hidden, input_dim, "sigmoid", rng=rng),
    ])
    return VaeModel(Sequential(layers), mean_head, log_var_head, decoder, input_dim, config)


def reparameterize(dist: EncodedDistribution, rng: np.random.Generator | None = None, noise: np.ndarray | None = None) -> np.ndarray:
    """``z = mean + exp(log_var / 2) * noise`` with standard-normal noise from ``rng``."""
    mean = np.asarray(dist.mean, dtype=np.float64)
    if noise is None:
        if rng is None:
            raise ConfigError("reparameterize needs a random stream or explicit noise")
        noise = rng.standard_normal(mean.shape)
    return mean + np.exp(0.5 * np.asarray(dist.log_var, dtype=np.float64)) * noise


def kl_divergence(dist: EncodedDistribution) -> np.ndarray:
    """Per-instance KL from ``N(mean, exp(log_var))`` to ``N(0, I)``, summed over latent dims."""
    mu = np.atleast_2d(np.asarray(dist.mean, dtype=np.float64))
    lv = np.atleast_2d(np.asarray(dist.log_var, dtype=np.float64))
    return -0.5 * np.sum(1.0 + lv - mu * mu - np.exp(lv), axis=1)


def elbo_loss(x: np.ndarray, reconstruction: np.ndarray, dist: EncodedDistribution) -> ElboBreakdown:
    """Negative ELBO as batch means of per-instance summed squared error and KL."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    reconstruction = np.atleast_2d(np.asarray(reconstruction, dtype=np.float64))
    if x.shape != reconstruction.shape:
        raise DimensionError(f"input {x.shape} and reconstruction {reconstruction.shape} differ")
    diff = x - reconstruction
    recon = float(np.mean(np.sum(diff * diff, axis=1)))
    kl = float(np.mean(kl_divergence(dist)))
    return ElboBreakdown(recon, kl, recon + kl)


def train_vae(rows: np.ndarray, config: VaeConfig | None = None) -> VaeModel:
    config = config or VaeConfig()
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] < config.min_rows:
        raise DataError(f"VAE needs at least {config.min_rows} rows, got {rows.shape[0]}")
    if not np.all(np.isfinite(rows)):
        raise DataError("non-finite rows")
    model = build_vae(rows.shape[1], config)
    params = model.parameters()
    state = AdamState(lr=config.lr)
    shuffle = stream(config.seed, "train_vae", "shuffle")
    noise_rng = stream(config.seed, "train_vae", "noise")
    eval_noise = stream(config.seed, "train_vae", "eval").standard_normal((rows.shape[0], config.z_dim))
    model.loss_history = [model.loss_and_grads((rows, eval_noise))[0]]
    for _ in range(config.epochs):
        total = 0.0
        for idx in minibatches(rows.shape[0], config.batch_size, shuffle):
            noise = noise_rng.standard_normal((len(idx), config.z_dim))
            loss, grads = model.loss_and_grads((rows[idx], noise))
            adam_step(params, grads, state)
            total += loss * len(idx)
        model.loss_history.append(total / rows.shape[0])
    return model


def generate(vae: VaeModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Decode ``n`` prior draws ``z ~ N(0, I)``."""
    if n < 1:
        raise ConfigError(f"must generate at least one row, got {n}")
    z = rng.standard_normal((int(n), vae.z_dim))
    out = vae.decode(z)
    if not np.all(np.isfinite(out)):
        raise NumericError("generated rows are not finite")
    return out


# ---------------------------------------------------------------- capped plans

@dataclass(frozen=True)
class AugmentationPlan:
    """Add ``n`` synthetic rows to ``target_class``; ``n`` stays below the original count."""

    target_class: str
    original_count: int
    n: int

    def __post_init__(self) -> None:
        check_cap(self.n, self.original_count, self.target_class)


def check_cap(n: int, class_count: int, name: str = "") -> None:
    label = f" for {name!r}" if name else ""
    if n < 1:
        raise CapViolationError(f"synthetic count{label} must be positive, got {n}")
    if n >= class_count:
        raise CapViolationError(
            f"synthetic count {n}{label} would not stay below the {class_count} original rows"
        )


def plan_from_fraction(class_count: int, fraction: float) -> int:
    """``round_half_up(fraction * class_count)``, refusing anything at or above the cap."""
    if class_count < 1:
        raise ConfigError("class count must be positive")
    if not 0.0 < fraction < 1.0:
        raise CapViolationError(f"fraction must lie in (0, 1), got {fraction}")
    n = int(math.floor(fraction * class_count + 0.5))
    check_cap(n, class_count)
    return n


def make_plan(dataset: Dataset, target_class: str, *, fraction: float | None = None, count: int | None = None) -> AugmentationPlan:
    """Plan against the dataset's actual count; an absolute ``count`` wins over ``fraction``."""
    original = dataset.class_counts()[dataset.class_names[dataset.class_index(target_class)]]
    if count is not None:
        n = int(count)
    elif fraction is not None:
        n = plan_from_fraction(original, fraction)
    else:
        raise ConfigError(f"plan for {target_class!r} needs a fraction or a count")
    return AugmentationPlan(target_class, original, n)


def augment_dataset(
    dataset: Dataset,
    plans: Sequence[AugmentationPlan],
    vaes: Mapping[str, VaeModel],
    rng: np.random.Generator | int,
) -> Dataset:
    """Append ``plan.n`` decoded prior samples per plan, flagged synthetic.

    Every plan is validated against the real class counts before anything
    is generated; originals are returned unchanged and first.
    """
    counts = dataset.class_counts()
    seen = set()
    for plan in plans:
        k = dataset.class_index(plan.target_class)
        if plan.target_class in seen:
            raise ConfigError(f"duplicate plan for {plan.target_class!r}")
        seen.add(plan.target_class)
        check_cap(plan.n, counts[dataset.class_names[k]], plan.target_class)
        if plan.target_class not in vaes:
            raise ConfigError(f"no trained VAE for {plan.target_class!r}")
        if vaes[plan.target_class].input_dim != dataset.n_features:
            raise DimensionError(f"VAE for {plan.target_class!r} has the wrong width")
    if not plans:
        return dataset
    parts = [dataset]
    for plan in plans:
        k = dataset.class_index(plan.target_class)
        gen_rng = stream(rng, "augment", plan.target_class) if isinstance(rng, (int, np.integer)) else rng
        rows = generate(vaes[plan.target_class], plan.n, gen_rng)
        parts.append(
            Dataset(rows, np.full(plan.n, k), list(dataset.class_names), list(dataset.feature_names),
                    np.ones(plan.n, dtype=bool))
        )
    return Dataset.concat(parts)
