"""Shared test utilities."""
from __future__ import annotations

import numpy as np


def jitter_biases(params: dict, rng: np.random.Generator, scale: float = 0.1) -> None:
    """Move zero-initialised biases off 0.

    A ReLU unit whose whole input row is zero (dead upstream units or dropped
    ones) has a pre-activation of exactly its bias. At bias 0 that sits on
    the kink, where central differences see half a slope and the analytic
    gradient sees none.
    """
    for name, p in params.items():
        if name.endswith(".b"):
            p += rng.normal(0.0, scale, p.shape)
