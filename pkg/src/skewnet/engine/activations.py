from __future__ import annotations

import numpy as np

ACTIVATIONS = ("relu", "softmax", "linear", "sigmoid", "tanh")


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis."""
    shifted = x - np.max(x, axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=-1, keepdims=True)


def activation_apply(values: np.ndarray, kind: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if kind == "relu":
        return relu(values)
    if kind == "softmax":
        return softmax(values)
    if kind == "linear":
        return values.copy()
    if kind == "sigmoid":
        return sigmoid(values)
    if kind == "tanh":
        return np.tanh(values)
    raise ValueError(f"unknown activation {kind!r}")


def activation_backward(dout: np.ndarray, out: np.ndarray, kind: str) -> np.ndarray:
    """Gradient w.r.t. pre-activations, given the activation's output."""
    if kind == "relu":
        return dout * (out > 0)
    if kind == "linear":
        return dout
    if kind == "sigmoid":
        return dout * out * (1.0 - out)
    if kind == "tanh":
        return dout * (1.0 - out * out)
    if kind == "softmax":
        return out * (dout - np.sum(dout * out, axis=-1, keepdims=True))
    raise ValueError(f"unknown activation {kind!r}")
