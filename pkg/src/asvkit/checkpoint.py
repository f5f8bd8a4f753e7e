"""Binary checkpoint format for network parameters and the loss scalars.

Layout: magic 'GE2E', u32 version, then one record per tensor:
u16 name length, UTF-8 name, u8 rank, u32 per dimension, float32
little-endian row-major data. The loss scalars ride along as rank-0 tensors
named 'ge2e.scale' and 'ge2e.bias'.
"""

from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path

import numpy as np

from .ge2e import GE2EScalars
from .lstm import _GATES, LstmLayerParams, NetworkParams

_MAGIC = b"GE2E"
_VERSION = 1


class CheckpointError(ValueError):
    """Raised for malformed or dimensionally inconsistent checkpoint files."""


def _write_tensor(buf, name: str, tensor: np.ndarray) -> None:
    encoded = name.encode("utf-8")
    # asarray, not ascontiguousarray: rank-0 scalars must stay rank-0
    data = np.asarray(tensor, dtype="<f4")
    if data.ndim:
        data = np.ascontiguousarray(data)
    buf.write(struct.pack("<H", len(encoded)))
    buf.write(encoded)
    buf.write(struct.pack("<B", data.ndim))
    for dim in data.shape:
        buf.write(struct.pack("<I", dim))
    buf.write(data.tobytes())


def serialize_checkpoint(params: NetworkParams, scalars: GE2EScalars) -> bytes:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", _VERSION))
    for name, tensor in params.named_tensors():
        _write_tensor(buf, name, tensor)
    _write_tensor(buf, "ge2e.scale", np.float32(scalars.scale))
    _write_tensor(buf, "ge2e.bias", np.float32(scalars.bias))
    return buf.getvalue()


def save_checkpoint(path: str | Path, params: NetworkParams, scalars: GE2EScalars) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_checkpoint(params, scalars))


def checkpoint_digest(params: NetworkParams, scalars: GE2EScalars) -> str:
    """Content hash of the serialized checkpoint, for provenance records."""
    return hashlib.sha256(serialize_checkpoint(params, scalars)).hexdigest()


def _read_exact(fh, count: int, path, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise CheckpointError(f"{path}: truncated while reading {what}")
    return data


def load_checkpoint(path: str | Path, dtype=np.float32) -> tuple[NetworkParams, GE2EScalars]:
    """Read a checkpoint, validating every tensor name and dimension."""
    tensors: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise CheckpointError(f"{path}: bad magic (not a checkpoint file)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, path, "version"))
        if version != _VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        while True:
            head = fh.read(2)
            if not head:
                break
            if len(head) != 2:
                raise CheckpointError(f"{path}: truncated tensor record")
            (name_len,) = struct.unpack("<H", head)
            name = _read_exact(fh, name_len, path, "tensor name").decode("utf-8")
            if name in tensors:
                raise CheckpointError(f"{path}: duplicate tensor {name!r}")
            (rank,) = struct.unpack("<B", _read_exact(fh, 1, path, f"{name} rank"))
            shape = tuple(
                struct.unpack("<I", _read_exact(fh, 4, path, f"{name} dims"))[0]
                for _ in range(rank)
            )
            count = int(np.prod(shape, dtype=np.int64)) if rank else 1
            raw = _read_exact(fh, 4 * count, path, f"{name} data")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(dtype)
    return _assemble(tensors, path, dtype)


def _take(tensors: dict, name: str, path) -> np.ndarray:
    if name not in tensors:
        raise CheckpointError(f"{path}: missing tensor {name!r}")
    return tensors.pop(name)


def _assemble(tensors: dict, path, dtype) -> tuple[NetworkParams, GE2EScalars]:
    scale = _take(tensors, "ge2e.scale", path)
    bias = _take(tensors, "ge2e.bias", path)
    if scale.ndim != 0 or bias.ndim != 0:
        raise CheckpointError(f"{path}: loss scalars must be rank-0")
    num_layers = 0
    while f"layer{num_layers}.w_ix" in tensors:
        num_layers += 1
    if num_layers == 0:
        raise CheckpointError(f"{path}: no LSTM layer tensors found")
    layers = []
    hidden = None
    expected_in = None
    for index in range(num_layers):
        fields = {}
        for gate in _GATES:
            fields[f"w_{gate}x"] = _take(tensors, f"layer{index}.w_{gate}x", path)
        for gate in _GATES:
            fields[f"w_{gate}h"] = _take(tensors, f"layer{index}.w_{gate}h", path)
        for gate in _GATES:
            fields[f"b_{gate}"] = _take(tensors, f"layer{index}.b_{gate}", path)
        in_dim, h = fields["w_ix"].shape
        if hidden is None:
            hidden = h
        if h != hidden:
            raise CheckpointError(f"{path}: layer{index} hidden size {h} != {hidden}")
        if expected_in is not None and in_dim != expected_in:
            raise CheckpointError(
                f"{path}: layer{index} input dim {in_dim} != previous hidden {expected_in}"
            )
        for gate in _GATES:
            if fields[f"w_{gate}x"].shape != (in_dim, h):
                raise CheckpointError(f"{path}: layer{index}.w_{gate}x has inconsistent shape")
            if fields[f"w_{gate}h"].shape != (h, h):
                raise CheckpointError(f"{path}: layer{index}.w_{gate}h must be ({h}, {h})")
            if fields[f"b_{gate}"].shape != (h,):
                raise CheckpointError(f"{path}: layer{index}.b_{gate} must be ({h},)")
        layers.append(LstmLayerParams(**fields))
        expected_in = h
    proj_w = _take(tensors, "proj.w", path)
    proj_b = _take(tensors, "proj.b", path)
    if proj_w.ndim != 2 or proj_w.shape[0] != hidden:
        raise CheckpointError(f"{path}: proj.w must be ({hidden}, embedding_dim)")
    if proj_b.shape != (proj_w.shape[1],):
        raise CheckpointError(f"{path}: proj.b must be ({proj_w.shape[1]},)")
    if tensors:
        raise CheckpointError(f"{path}: unexpected tensors {sorted(tensors)}")
    params = NetworkParams(layers, proj_w, proj_b)
    return params, GE2EScalars(scale=float(scale), bias=float(bias))
