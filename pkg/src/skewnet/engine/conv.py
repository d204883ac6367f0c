"""One-dimensional convolution (cross-correlation) over a channel-first signal."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, DimensionError
from . import init
from .activations import activation_apply, activation_backward
from .layers import Layer


def conv1d_output_length(length: int, kernel_len: int, stride: int, padding: str) -> int:
    if padding == "valid":
        if length < kernel_len:
            raise DimensionError(f"signal length {length} shorter than kernel {kernel_len} under valid padding")
        return (length - kernel_len) // stride + 1
    return math.ceil(length / stride)


class Conv1D(Layer):
    """Cross-correlation with kernels ``[out_channels, in_channels, kernel_len]``.

    ``same`` padding follows the TensorFlow convention: output length
    ``ceil(L / stride)``, with any odd padding element placed on the right.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_len: int,
        stride: int = 1,
        padding: str = "valid",
        activation: str = "linear",
        rng: np.random.Generator | None = None,
        kernels: np.ndarray | None = None,
        bias: np.ndarray | None = None,
    ) -> None:
        super().__init__()
        if kernel_len < 1 or stride < 1 or in_channels < 1 or out_channels < 1:
            raise ConfigError("conv1d sizes and stride must be positive")
        if padding not in ("valid", "same"):
            raise ConfigError(f"padding must be 'valid' or 'same', got {padding!r}")
        self.stride = int(stride)
        self.padding = padding
        self.activation = activation
        shape = (out_channels, in_channels, kernel_len)
        if kernels is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            fan_in = in_channels * kernel_len
            kernels = init.for_activation(rng, shape, fan_in, out_channels * kernel_len, activation)
        if bias is None:
            bias = np.zeros(out_channels)
        kernels = np.asarray(kernels, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if kernels.shape != shape or bias.shape != (out_channels,):
            raise DimensionError(f"kernels {kernels.shape} / bias {bias.shape} inconsistent with {shape}")
        self.params = {"K": kernels.copy(), "b": bias.copy()}
        self.zero_grads()

    @property
    def kernel_len(self) -> int:
        return self.params["K"].shape[2]

    @property
    def in_channels(self) -> int:
        return self.params["K"].shape[1]

    @property
    def out_channels(self) -> int:
        return self.params["K"].shape[0]

    def output_length(self, length: int) -> int:
        return conv1d_output_length(length, self.kernel_len, self.stride, self.padding)

    def _pads(self, length: int, out_len: int) -> tuple[int, int]:
        if self.padding == "valid":
            return 0, 0
        total = max((out_len - 1) * self.stride + self.kernel_len - length, 0)
        return total // 2, total - total // 2

    def forward(self, x, *, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise DimensionError(f"conv1d expects [N x {self.in_channels} x L], got {x.shape}")
        length = x.shape[2]
        out_len = self.output_length(length)
        left, right = self._pads(length, out_len)
        xp = np.pad(x, ((0, 0), (0, 0), (left, right)))
        idx = np.arange(out_len)[:, None] * self.stride + np.arange(self.kernel_len)[None, :]
        cols = xp[:, :, idx]  # [N, C_in, L', k]
        z = np.einsum("nclk,ock->nol", cols, self.params["K"]) + self.params["b"][None, :, None]
        out = activation_apply(z, self.activation)
        self._cache = (cols, idx, xp.shape, left, length, out, out.shape)
        return out

    def backward(self, dout):
        cols, idx, padded_shape, left, length, out, _ = self._take_cache(dout)
        dz = activation_backward(dout, out, self.activation)
        self.grads["K"] = np.einsum("nol,nclk->ock", dz, cols)
        self.grads["b"] = dz.sum(axis=(0, 2))
        dcols = np.einsum("nol,ock->nclk", dz, self.params["K"])
        dxp = np.zeros(padded_shape)
        for j in range(self.kernel_len):
            dxp[:, :, idx[:, j]] += dcols[..., j]
        return dxp[:, :, left:left + length]

    def describe(self):
        return {
            "type": "Conv1D",
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_len": self.kernel_len,
            "stride": self.stride,
            "padding": self.padding,
            "activation": self.activation,
        }


def conv1d_forward(input: np.ndarray, layer: Conv1D) -> np.ndarray:
    return layer.forward(input)
