"""Weight initializers drawing from an explicit generator."""
from __future__ import annotations

import numpy as np


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def for_activation(rng: np.random.Generator, shape, fan_in: int, fan_out: int, activation: str) -> np.ndarray:
    if activation == "relu":
        return he_uniform(rng, shape, fan_in)
    return glorot_uniform(rng, shape, fan_in, fan_out)
