from __future__ import annotations

from typing import Iterable

import numpy as np

from ..errors import StateError
from .layers import Dropout, Layer
from .loss import weighted_cross_entropy, weighted_cross_entropy_grad


class Sequential:
    """An ordered stack of layers with flat, dotted parameter names (``"2.W"``)."""

    def __init__(self, layers: Iterable[Layer]) -> None:
        self.layers = list(layers)
        self._last_input: np.ndarray | None = None
        self._last_output: np.ndarray | None = None

    def forward(self, x: np.ndarray, *, train: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._last_input = x
        out = x
        for layer in self.layers:
            out = layer.forward(out, train=train, rng=rng)
        self._last_output = out
        return out

    __call__ = forward

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._last_output is None:
            raise StateError("backward called before forward")
        grad = dout
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.params.items()}

    def gradients(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.grads.items()}

    def set_dropout_mode(self, mode: str) -> None:
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.mode = mode


def backward_pass(model: Sequential, input_batch: np.ndarray, targets: np.ndarray, weights=None) -> dict[str, np.ndarray]:
    """Gradients of the weighted cross-entropy for the batch last seen by ``model.forward``."""
    if model._last_input is None or model._last_output is None:
        raise StateError("no cached forward pass")
    x = np.asarray(input_batch, dtype=np.float64)
    if x.shape != model._last_input.shape or not np.array_equal(x, model._last_input):
        raise StateError("cached forward pass belongs to a different batch")
    model.backward(weighted_cross_entropy_grad(model._last_output, targets, weights))
    return model.gradients()


def loss_and_grads(
    model: Sequential,
    x: np.ndarray,
    targets: np.ndarray,
    weights=None,
    *,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    probs = model.forward(x, train=train, rng=rng)
    loss = weighted_cross_entropy(probs, targets, weights)
    return loss, backward_pass(model, x, targets, weights)


def minibatches(n: int, batch_size: int, rng: np.random.Generator | None = None):
    """Yield index arrays covering ``range(n)``; shuffled when ``rng`` is given."""
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]
