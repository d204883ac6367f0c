from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, NumericError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    parameters: dict[str, np.ndarray],
    gradients: dict[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update, applied to ``parameters`` in place.

    All gradients are validated before any parameter moves, so a non-finite
    gradient leaves both parameters and state untouched. A parameter whose
    gradient is identically zero is skipped, moments included, so a zero
    gradient is a fixed point whatever momentum has built up.
    """
    for name, p in parameters.items():
        g = gradients.get(name)
        if g is None or g.shape != p.shape:
            raise DimensionError(f"gradient for {name!r} missing or mis-shaped")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name!r}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for name, p in parameters.items():
        g = gradients[name]
        if not g.any():
            continue
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        p -= state.lr * (m / corr1) / (np.sqrt(v / corr2) + state.eps)
    return parameters, state
