"""Central finite-difference verification of analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .layers import Layer
from .network import Sequential, loss_and_grads

# denominators below this are treated as this, so near-zero gradients
# are compared in absolute rather than relative terms
EPS_FLOOR = 1e-6


class Checkable(Protocol):
    def parameters(self) -> dict[str, np.ndarray]: ...

    def loss_and_grads(self, batch: Any) -> tuple[float, dict[str, np.ndarray]]: ...


@dataclass
class GradReport:
    per_parameter: dict[str, float] = field(default_factory=dict)

    @property
    def global_max(self) -> float:
        return max(self.per_parameter.values(), default=0.0)

    def __str__(self) -> str:
        lines = [f"{name:>24s}  {err:.3e}" for name, err in self.per_parameter.items()]
        lines.append(f"{'global max':>24s}  {self.global_max:.3e}")
        return "\n".join(lines)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = EPS_FLOOR) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def gradient_check(model: Checkable, batch: Any, epsilon: float = 1e-5) -> GradReport:
    """Compare ``model.loss_and_grads`` against central differences, element by element."""
    params = model.parameters()
    report = GradReport()
    if not params:
        return report
    _, analytic = model.loss_and_grads(batch)
    analytic = {k: np.array(v, dtype=np.float64, copy=True) for k, v in analytic.items()}
    for name, p in params.items():
        numeric = np.zeros_like(p)
        flat = p.reshape(-1)  # view: perturbations write through
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            plus, _ = model.loss_and_grads(batch)
            flat[i] = orig - epsilon
            minus, _ = model.loss_and_grads(batch)
            flat[i] = orig
            num_flat[i] = (plus - minus) / (2.0 * epsilon)
        report.per_parameter[name] = float(relative_error(analytic[name], numeric).max(initial=0.0))
    return report


@dataclass
class Batch:
    """Inputs for a classification objective; ``dropout_seed`` pins dropout masks."""

    x: np.ndarray
    targets: np.ndarray
    weights: Any = None
    dropout_seed: int | None = None


class ClassifierObjective:
    """Adapts a softmax ``Sequential`` to :class:`Checkable` via weighted cross-entropy."""

    def __init__(self, network: Sequential) -> None:
        self.network = network

    def parameters(self):
        return self.network.parameters()

    def loss_and_grads(self, batch: Batch):
        train = batch.dropout_seed is not None
        rng = np.random.default_rng(batch.dropout_seed) if train else None
        return loss_and_grads(self.network, batch.x, batch.targets, batch.weights, train=train, rng=rng)


class LayerProbe:
    """Checks one layer through the scalar ``sum(layer(x) * projection)``.

    The input is exposed as the pseudo-parameter ``"input"`` so the
    input gradient is verified alongside the layer's own parameters.
    """

    def __init__(self, layer: Layer, x: np.ndarray, projection: np.ndarray | None = None,
                 rng: np.random.Generator | None = None, train: bool = False, dropout_seed: int = 0) -> None:
        self.layer = layer
        self.x = np.array(x, dtype=np.float64, copy=True)
        self.train = train
        self.dropout_seed = dropout_seed
        if projection is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            projection = rng.standard_normal(self._forward().shape)
        self.projection = projection

    def _forward(self) -> np.ndarray:
        rng = np.random.default_rng(self.dropout_seed) if self.train else None
        return self.layer.forward(self.x, train=self.train, rng=rng)

    def parameters(self):
        return {"input": self.x, **self.layer.params}

    def loss_and_grads(self, batch=None):
        out = self._forward()
        loss = float(np.sum(out * self.projection))
        dx = self.layer.backward(self.projection)
        return loss, {"input": dx, **self.layer.grads}


class ScaledGradients:
    """Wraps a checkable and multiplies its analytic gradients by ``factor`` (fault injection)."""

    def __init__(self, inner: Checkable, factor: float) -> None:
        self.inner = inner
        self.factor = factor

    def parameters(self):
        return self.inner.parameters()

    def loss_and_grads(self, batch):
        loss, grads = self.inner.loss_and_grads(batch)
        return loss, {k: v * self.factor for k, v in grads.items()}


class FunctionObjective:
    """Checkable built from a plain ``loss_and_grads(params, batch)`` callable."""

    def __init__(self, params: dict[str, np.ndarray], fn: Callable[[dict, Any], tuple[float, dict]]) -> None:
        self.params = params
        self.fn = fn

    def parameters(self):
        return self.params

    def loss_and_grads(self, batch):
        return self.fn(self.params, batch)
