"""Class-weighted categorical cross-entropy and mean squared error."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import ConfigError, DataError, LabelError, NumericError

# probabilities are clipped to [EPS_CLIP, 1] before the logarithm
EPS_CLIP = 1e-12


@dataclass(frozen=True)
class ClassWeights:
    """Per-class loss multipliers, indexed by class id. Every weight is >= 1."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("class weights cannot be empty")
        for v in vals:
            if not np.isfinite(v) or v < 1.0:
                raise ConfigError(f"class weights must be finite and >= 1, got {v}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def uniform(cls, n_classes: int) -> "ClassWeights":
        return cls((1.0,) * n_classes)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float], class_names: Sequence[str]) -> "ClassWeights":
        """Build from a ``{class name: weight}`` map; unnamed classes get 1."""
        unknown = set(mapping) - set(class_names)
        if unknown:
            raise ConfigError(f"weights name unknown classes: {sorted(unknown)}")
        return cls(tuple(float(mapping.get(name, 1.0)) for name in class_names))

    def to_mapping(self, class_names: Sequence[str]) -> dict[str, float]:
        if len(class_names) != len(self.values):
            raise ConfigError("class name count does not match weight count")
        return {name: _compact(v) for name, v in zip(class_names, self.values)}

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _compact(v: float):
    return int(v) if float(v).is_integer() else v


def _weight_array(weights, n_classes: int) -> np.ndarray:
    if weights is None:
        return np.ones(n_classes)
    w = weights.as_array() if isinstance(weights, ClassWeights) else np.asarray(weights, dtype=np.float64)
    if w.shape != (n_classes,):
        raise ConfigError(f"expected {n_classes} class weights, got {w.shape}")
    return w


def _check(probabilities: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(targets)
    if p.ndim != 2 or y.shape != (p.shape[0],):
        raise DataError(f"probabilities {p.shape} and targets {y.shape} do not align")
    if not np.all(np.isfinite(p)):
        raise NumericError("non-finite probabilities")
    if y.size and (y.min() < 0 or y.max() >= p.shape[1]):
        raise LabelError(f"target index outside [0, {p.shape[1]})")
    return p, y.astype(np.int64)


def weighted_cross_entropy(probabilities, targets, weights=None) -> float:
    """Mean over the batch of ``weight[y] * -log p[y]``."""
    p, y = _check(probabilities, targets)
    w = _weight_array(weights, p.shape[1])
    picked = np.clip(p[np.arange(len(y)), y], EPS_CLIP, 1.0)
    return float(np.mean(w[y] * -np.log(picked)))


def weighted_cross_entropy_grad(probabilities, targets, weights=None) -> np.ndarray:
    """Gradient of :func:`weighted_cross_entropy` with respect to the probabilities."""
    p, y = _check(probabilities, targets)
    w = _weight_array(weights, p.shape[1])
    n = len(y)
    rows = np.arange(n)
    picked = p[rows, y]
    grad = np.zeros_like(p)
    live = picked > EPS_CLIP  # the clip flattens the loss below the threshold
    grad[rows[live], y[live]] = -w[y[live]] / (n * picked[live])
    return grad


def mse(prediction: np.ndarray, target: np.ndarray) -> float:
    diff = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(diff * diff))


def mse_grad(prediction: np.ndarray, target: np.ndarray) -> np.ndarray:
    diff = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return 2.0 * diff / diff.size
