import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

from skewnet import checkpoint
from skewnet.errors import DataError


class TestContainer:
    def test_round_trip_bits(self, tmp_path):
        tensors = {"w": np.array([[1.5, -0.0], [np.pi, 1e-300]]), "b": np.zeros(3)}
        checkpoint.save(tmp_path / "c.skwn", "DNN", {"a": "1"}, tensors)
        kind, header, back = checkpoint.load(tmp_path / "c.skwn")
        assert kind == "DNN" and header == {"a": "1"}
        for k in tensors:
            assert back[k].tobytes() == tensors[k].tobytes()

    def test_magic_and_version(self):
        raw = checkpoint.to_bytes("AE", {}, {})
        assert raw[:4] == b"SKWN"
        assert struct.unpack("<H", raw[4:6])[0] == checkpoint.VERSION

    def test_header_order_does_not_matter(self):
        a = checkpoint.to_bytes("VAE", {"x": "1", "y": "2"}, {"t": np.ones(2)})
        b = checkpoint.to_bytes("VAE", {"y": "2", "x": "1"}, {"t": np.ones(2)})
        assert a == b

    @pytest.mark.parametrize("raw", [b"", b"NOPE\x01\x00", b"SKWN\x09\x00"])
    def test_corrupt(self, raw):
        with pytest.raises(DataError):
            checkpoint.from_bytes(raw)

    def test_truncated(self):
        raw = checkpoint.to_bytes("DNN", {}, {"w": np.ones((4, 4))})
        with pytest.raises(DataError):
            checkpoint.from_bytes(raw[:-8])

    def test_assign_shape_mismatch(self):
        with pytest.raises(DataError):
            checkpoint.assign({"w": np.zeros(3)}, {"w": np.zeros(4)})

    def test_assign_missing(self):
        with pytest.raises(DataError):
            checkpoint.assign({"w": np.zeros(3)}, {})

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, array_shapes(min_dims=0, max_dims=3, max_side=4)))
    def test_any_tensor(self, arr):
        _, _, back = checkpoint.from_bytes(checkpoint.to_bytes("AE", {}, {"t": arr}))
        assert back["t"].shape == arr.shape
        assert back["t"].tobytes() == np.ascontiguousarray(arr).tobytes()
