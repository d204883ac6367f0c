"""Binary checkpoint container shared by classifiers, auto-encoders and VAEs.

Layout (all integers little-endian)::

    b"SKWN"                       magic
    u16 version                   currently 1
    u32 n_header                  then n_header entries of
        u16 len, utf-8 key
        u32 len, utf-8 value      header keys are written sorted
    u32 n_tensors                 then n_tensors entries of
        u16 len, utf-8 name
        u8 ndim, ndim x u32 dims
        float64 data, row-major

The header always carries ``kind`` (``DNN``, ``BLSTM``, ``AE`` or ``VAE``).
Loading reproduces every tensor bit for bit.
"""
from __future__ import annotations

import io
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError

MAGIC = b"SKWN"
VERSION = 1


def _put_str(buf: io.BytesIO, s: str, fmt: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack(fmt, len(raw)))
    buf.write(raw)


def to_bytes(kind: str, header: Mapping[str, str], tensors: Mapping[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    full = {**{k: str(v) for k, v in header.items()}, "kind": kind}
    buf.write(struct.pack("<I", len(full)))
    for key in sorted(full):
        _put_str(buf, key, "<H")
        _put_str(buf, full[key], "<I")
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        arr = np.array(arr, dtype="<f8", order="C")  # keeps 0-d shapes
        _put_str(buf, name, "<H")
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes(order="C"))
    return buf.getvalue()


class _Reader:
    def __init__(self, raw: bytes) -> None:
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise DataError("truncated checkpoint")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self, fmt: str) -> str:
        (n,) = self.unpack(fmt)
        return self.take(n).decode("utf-8")


def from_bytes(raw: bytes) -> tuple[str, dict[str, str], dict[str, np.ndarray]]:
    r = _Reader(raw)
    if r.take(4) != MAGIC:
        raise DataError("not a SKWN checkpoint")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    (n_header,) = r.unpack("<I")
    header = {}
    for _ in range(n_header):
        key = r.string("<H")
        header[key] = r.string("<I")
    (n_tensors,) = r.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        name = r.string("<H")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I") if ndim else ()
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64)
        tensors[name] = data.reshape(shape)
    if r.pos != len(raw):
        raise DataError("trailing bytes after checkpoint")
    kind = header.pop("kind", "")
    return kind, header, tensors


def save(path: str | Path, kind: str, header: Mapping[str, str], tensors: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(kind, header, tensors))
    return path


def load(path: str | Path) -> tuple[str, dict[str, str], dict[str, np.ndarray]]:
    return from_bytes(Path(path).read_bytes())


def assign(params: Mapping[str, np.ndarray], tensors: Mapping[str, np.ndarray]) -> None:
    """Copy loaded tensors into live parameter arrays, checking names and shapes."""
    if set(params) != set(tensors):
        raise DataError(f"checkpoint tensors {sorted(tensors)} do not match model parameters {sorted(params)}")
    for name, p in params.items():
        t = tensors[name]
        if t.shape != p.shape:
            raise DataError(f"tensor {name!r}: checkpoint shape {t.shape} vs model {p.shape}")
        p[...] = t
