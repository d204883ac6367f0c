"""Layers with hand-written backward passes.

Every layer owns ``params`` and ``grads`` dicts keyed by short names. A
forward call caches whatever the matching backward call needs; calling
``backward`` without that cache raises :class:`StateError`.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DimensionError, StateError
from .activations import ACTIVATIONS, activation_apply, activation_backward
from . import init


class Layer:
    """Base class. Parameter-free layers inherit the empty dicts."""

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x: np.ndarray, *, train: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grads(self) -> None:
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def _take_cache(self, dout: np.ndarray):
        if self._cache is None:
            raise StateError(f"{type(self).__name__}.backward called before forward")
        out_shape = self._cache[-1]
        if dout.shape != out_shape:
            raise StateError(
                f"{type(self).__name__}: upstream gradient {dout.shape} does not match cached output {out_shape}"
            )
        return self._cache

    def describe(self) -> dict:
        return {"type": type(self).__name__}


class Dense(Layer):
    """Fully connected layer ``activation(x @ W + b)``."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        activation: str = "linear",
        rng: np.random.Generator | None = None,
        weights: np.ndarray | None = None,
        bias: np.ndarray | None = None,
    ) -> None:
        super().__init__()
        if in_dim < 1 or out_dim < 1:
            raise ConfigError(f"dense dimensions must be positive, got {in_dim}x{out_dim}")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.activation = activation
        if weights is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            weights = init.for_activation(rng, (in_dim, out_dim), in_dim, out_dim, activation)
        if bias is None:
            bias = np.zeros(out_dim)
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weights.shape != (in_dim, out_dim) or bias.shape != (out_dim,):
            raise DimensionError(f"weights {weights.shape} / bias {bias.shape} inconsistent with {in_dim}x{out_dim}")
        self.params = {"W": weights.copy(), "b": bias.copy()}
        self.zero_grads()

    @property
    def in_dim(self) -> int:
        return self.params["W"].shape[0]

    @property
    def out_dim(self) -> int:
        return self.params["W"].shape[1]

    def forward(self, x, *, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(f"dense expects [N x {self.in_dim}], got {x.shape}")
        out = activation_apply(x @ self.params["W"] + self.params["b"], self.activation)
        self._cache = (x, out, out.shape)
        return out

    def backward(self, dout):
        x, out, _ = self._take_cache(dout)
        dz = activation_backward(dout, out, self.activation)
        self.grads["W"] = x.T @ dz
        self.grads["b"] = dz.sum(axis=0)
        return dz @ self.params["W"].T

    def describe(self):
        return {"type": "Dense", "in": self.in_dim, "out": self.out_dim, "activation": self.activation}


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by ``1/(1-rate)`` during training."""

    def __init__(self, rate: float, mode: str = "eval") -> None:
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
        if mode not in ("train", "eval"):
            raise ConfigError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
        self.rate = float(rate)
        self.mode = mode

    def forward(self, x, *, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if not train or self.rate == 0.0:
            self._cache = (None, x.shape)
            return x
        if rng is None:
            raise ConfigError("dropout in train mode needs a random stream")
        keep = 1.0 - self.rate
        mask = (rng.random(x.shape) < keep) / keep
        self._cache = (mask, x.shape)
        return x * mask

    def backward(self, dout):
        mask, _ = self._take_cache(dout)
        return dout if mask is None else dout * mask

    def describe(self):
        return {"type": "Dropout", "rate": self.rate}


class Reshape(Layer):
    """Reshape the non-batch axes."""

    def __init__(self, shape: tuple[int, ...]) -> None:
        super().__init__()
        self.shape = tuple(int(s) for s in shape)

    def forward(self, x, *, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        out = x.reshape((x.shape[0],) + self.shape)
        self._cache = (x.shape, out.shape)
        return out

    def backward(self, dout):
        in_shape, _ = self._take_cache(dout)
        return dout.reshape(in_shape)

    def describe(self):
        return {"type": "Reshape", "shape": list(self.shape)}


class Flatten(Layer):
    def forward(self, x, *, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        out = x.reshape(x.shape[0], -1)
        self._cache = (x.shape, out.shape)
        return out

    def backward(self, dout):
        in_shape, _ = self._take_cache(dout)
        return dout.reshape(in_shape)


def dense_forward(input: np.ndarray, layer: Dense) -> np.ndarray:
    return layer.forward(input)


def dropout_apply(input: np.ndarray, layer: Dropout, rng: np.random.Generator | None = None) -> np.ndarray:
    return layer.forward(input, train=layer.mode == "train", rng=rng)
