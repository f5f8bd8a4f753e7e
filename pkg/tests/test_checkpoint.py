"""Binary checkpoint format: round trips, digests, corruption handling."""

import numpy as np
import pytest

from asvkit.checkpoint import (
    CheckpointError,
    checkpoint_digest,
    load_checkpoint,
    save_checkpoint,
    serialize_checkpoint,
)
from asvkit.ge2e import GE2EScalars
from asvkit.lstm import NetworkShape, init_params

SHAPE = NetworkShape(input_dim=6, hidden_size=5, num_layers=2, embedding_dim=3)


@pytest.fixture
def params():
    return init_params(21, SHAPE)


@pytest.fixture
def scalars():
    return GE2EScalars(scale=8.25, bias=-4.5)


class TestRoundTrip:
    def test_exact_equality(self, tmp_path, params, scalars):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, params, scalars)
        loaded, loaded_scalars = load_checkpoint(path)
        assert loaded.shape == params.shape
        for (na, ta), (nb, tb) in zip(params.named_tensors(), loaded.named_tensors()):
            assert na == nb
            assert np.array_equal(ta, tb)
        assert loaded_scalars.scale == scalars.scale
        assert loaded_scalars.bias == scalars.bias

    def test_serialization_deterministic(self, params, scalars):
        assert serialize_checkpoint(params, scalars) == serialize_checkpoint(params, scalars)

    def test_digest_tracks_content(self, params, scalars):
        d1 = checkpoint_digest(params, scalars)
        params.proj_b[0] += 1.0
        d2 = checkpoint_digest(params, scalars)
        assert d1 != d2
        assert len(d1) == 64  # sha256 hex

    def test_float64_load(self, tmp_path, params, scalars):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, params, scalars)
        loaded, _ = load_checkpoint(path, dtype=np.float64)
        assert loaded.dtype == np.float64


class TestCorruption:
    def write(self, tmp_path, params, scalars):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, params, scalars)
        return path

    def test_bad_magic(self, tmp_path, params, scalars):
        path = self.write(tmp_path, params, scalars)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_truncated(self, tmp_path, params, scalars):
        path = self.write(tmp_path, params, scalars)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_trailing_garbage(self, tmp_path, params, scalars):
        path = self.write(tmp_path, params, scalars)
        path.write_bytes(path.read_bytes() + b"\x01\x02\x03")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_tensor(self, tmp_path, params, scalars):
        # rebuild the file without the trailing loss-offset record
        full = serialize_checkpoint(params, scalars)
        name = b"ge2e.bias"
        cut = full.rindex(bytes([len(name)]) + b"\x00" + name)
        path = tmp_path / "m.ckpt"
        path.write_bytes(full[:cut])
        with pytest.raises(CheckpointError, match="ge2e.bias"):
            load_checkpoint(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.ckpt"
        path.write_bytes(b"")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
