"""LSTM layer (unidirectional or bidirectional) with full backprop through time."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DimensionError
from . import init
from .activations import sigmoid
from .layers import Layer

GATES = ("i", "f", "g", "o")


class LSTM(Layer):
    """Standard LSTM with sigmoid input/forget/output gates and a tanh candidate.

    Parameters are stored per gate and per direction: ``fw.W_i`` (input to
    hidden, ``[F x H]``), ``fw.U_i`` (hidden to hidden, ``[H x H]``),
    ``fw.b_i`` (``[H]``), and likewise for ``f``, ``g``, ``o`` and the ``bw``
    direction when bidirectional. Initial hidden and cell states are zero.
    The bidirectional output concatenates forward and backward hidden states
    at each timestep, forward first.
    """

    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        direction: str = "bidirectional",
        rng: np.random.Generator | None = None,
    ) -> None:
        super().__init__()
        if input_size < 1 or hidden_size < 1:
            raise ConfigError("lstm sizes must be positive")
        if direction not in ("forward", "bidirectional"):
            raise ConfigError(f"direction must be 'forward' or 'bidirectional', got {direction!r}")
        self.input_size = int(input_size)
        self.hidden_size = int(hidden_size)
        self.direction = direction
        rng = rng if rng is not None else np.random.default_rng(0)
        F, H = self.input_size, self.hidden_size
        for d in self.directions:
            for g in GATES:
                self.params[f"{d}.W_{g}"] = init.glorot_uniform(rng, (F, H), F, H)
                self.params[f"{d}.U_{g}"] = init.glorot_uniform(rng, (H, H), H, H)
                # forget gate starts open, as in common framework defaults
                self.params[f"{d}.b_{g}"] = np.ones(H) if g == "f" else np.zeros(H)
        self.zero_grads()

    @property
    def directions(self) -> tuple[str, ...]:
        return ("fw", "bw") if self.direction == "bidirectional" else ("fw",)

    @property
    def output_size(self) -> int:
        return self.hidden_size * len(self.directions)

    def _stacked(self, d: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        W = np.concatenate([self.params[f"{d}.W_{g}"] for g in GATES], axis=1)
        U = np.concatenate([self.params[f"{d}.U_{g}"] for g in GATES], axis=1)
        b = np.concatenate([self.params[f"{d}.b_{g}"] for g in GATES])
        return W, U, b

    def _run(self, x: np.ndarray, d: str):
        N, T, _ = x.shape
        H = self.hidden_size
        W, U, b = self._stacked(d)
        h = np.zeros((N, H))
        c = np.zeros((N, H))
        hs = np.empty((N, T, H))
        steps = []
        xw = np.einsum("ntf,fk->ntk", x, W) + b
        for t in range(T):
            a = xw[:, t] + h @ U
            i = sigmoid(a[:, :H])
            f = sigmoid(a[:, H:2 * H])
            g = np.tanh(a[:, 2 * H:3 * H])
            o = sigmoid(a[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t] = h
            steps.append((i, f, g, o, c_prev, h_prev, tc))
        return hs, steps

    def _bptt(self, x: np.ndarray, dhs: np.ndarray, steps, d: str) -> np.ndarray:
        N, T, F = x.shape
        H = self.hidden_size
        W, U, _ = self._stacked(d)
        dW = np.zeros_like(W)
        dU = np.zeros_like(U)
        db = np.zeros(4 * H)
        dx = np.empty_like(x)
        dh_next = np.zeros((N, H))
        dc_next = np.zeros((N, H))
        for t in range(T - 1, -1, -1):
            i, f, g, o, c_prev, h_prev, tc = steps[t]
            dh = dhs[:, t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            da = np.concatenate(
                [dc * g * i * (1.0 - i), dc * c_prev * f * (1.0 - f), dc * i * (1.0 - g * g), do * o * (1.0 - o)],
                axis=1,
            )
            dW += x[:, t].T @ da
            dU += h_prev.T @ da
            db += da.sum(axis=0)
            dx[:, t] = da @ W.T
            dh_next = da @ U.T
            dc_next = dc * f
        for k, gate in enumerate(GATES):
            cols = slice(k * H, (k + 1) * H)
            self.grads[f"{d}.W_{gate}"] = dW[:, cols].copy()
            self.grads[f"{d}.U_{gate}"] = dU[:, cols].copy()
            self.grads[f"{d}.b_{gate}"] = db[cols].copy()
        return dx

    def forward(self, x, *, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise DimensionError(f"lstm expects [N x T x {self.input_size}], got {x.shape}")
        hs_fw, steps_fw = self._run(x, "fw")
        if self.direction == "forward":
            self._cache = (x, steps_fw, None, hs_fw.shape)
            return hs_fw
        hs_bw_rev, steps_bw = self._run(x[:, ::-1], "bw")
        out = np.concatenate([hs_fw, hs_bw_rev[:, ::-1]], axis=2)
        self._cache = (x, steps_fw, steps_bw, out.shape)
        return out

    def backward(self, dout):
        x, steps_fw, steps_bw, _ = self._take_cache(dout)
        H = self.hidden_size
        dx = self._bptt(x, dout[:, :, :H], steps_fw, "fw")
        if steps_bw is not None:
            dx_rev = self._bptt(x[:, ::-1], dout[:, ::-1, H:], steps_bw, "bw")
            dx = dx + dx_rev[:, ::-1]
        return dx

    def describe(self):
        return {
            "type": "LSTM",
            "input_size": self.input_size,
            "hidden_size": self.hidden_size,
            "direction": self.direction,
        }


class FinalStates(Layer):
    """Collapse an LSTM sequence to the last state of each direction.

    For a bidirectional sequence of width ``2H`` this is the forward state at
    the last timestep joined with the backward state at the first timestep
    (the backward pass's final step).
    """

    def __init__(self, hidden_size: int, bidirectional: bool = True) -> None:
        super().__init__()
        self.hidden_size = int(hidden_size)
        self.bidirectional = bidirectional

    def forward(self, x, *, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        H = self.hidden_size
        if self.bidirectional:
            out = np.concatenate([x[:, -1, :H], x[:, 0, H:]], axis=1)
        else:
            out = x[:, -1, :].copy()
        self._cache = (x.shape, out.shape)
        return out

    def backward(self, dout):
        in_shape, _ = self._take_cache(dout)
        H = self.hidden_size
        dx = np.zeros(in_shape)
        if self.bidirectional:
            dx[:, -1, :H] = dout[:, :H]
            dx[:, 0, H:] = dout[:, H:]
        else:
            dx[:, -1, :] = dout
        return dx

    def describe(self):
        return {"type": "FinalStates", "hidden_size": self.hidden_size, "bidirectional": self.bidirectional}


def bilstm_forward(input: np.ndarray, layer: LSTM) -> np.ndarray:
    if layer.direction != "bidirectional":
        raise ConfigError("bilstm_forward needs a bidirectional layer")
    return layer.forward(input)
