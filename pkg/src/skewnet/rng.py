"""Named, order-independent random streams.

Every stage derives its generator from the run seed plus a tuple of string
keys, so adding or removing a stage never shifts another stage's draws.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *keys: str | int) -> np.random.Generator:
    spawn_key = tuple(
        k if isinstance(k, int) else zlib.crc32(str(k).encode("utf-8")) for k in keys
    )
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=spawn_key)))


def derive_seed(seed: int, *keys: str | int) -> int:
    """Integer seed for APIs that take a seed rather than a generator."""
    return int(stream(seed, *keys).integers(0, 2**63 - 1))
