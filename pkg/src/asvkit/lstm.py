"""Stacked-LSTM embedding network with hand-derived backpropagation through time.

The network maps a (frames, feature_dim) segment to a unit-norm embedding:
stacked LSTM layers, an affine projection of the final top-layer hidden
state, then L2 normalization. Forward keeps a cache so backward can run full
BPTT without recomputation; gradients are exact and finite-difference checked
in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

DEFAULT_INPUT_DIM = 40
DEFAULT_HIDDEN_SIZE = 768
DEFAULT_NUM_LAYERS = 3
DEFAULT_EMBEDDING_DIM = 256

_GATES = ("i", "f", "g", "o")


class DivergenceError(RuntimeError):
    """Raised when activations or gradients stop being finite."""


class DegenerateEmbeddingError(ValueError):
    """Raised when a pre-normalization embedding has zero norm."""


@dataclass
class NetworkShape:
    """Architecture hyperparameters; defaults give the full-size network."""

    input_dim: int = DEFAULT_INPUT_DIM
    hidden_size: int = DEFAULT_HIDDEN_SIZE
    num_layers: int = DEFAULT_NUM_LAYERS
    embedding_dim: int = DEFAULT_EMBEDDING_DIM

    def __post_init__(self) -> None:
        for name in ("input_dim", "hidden_size", "num_layers", "embedding_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class LstmLayerParams:
    """One LSTM layer: per-gate input weights, recurrent weights, biases.

    Gate order is input (i), forget (f), cell candidate (g), output (o).
    Input weights are (in_dim, hidden), recurrent weights (hidden, hidden),
    biases (hidden,), so activations right-multiply the matrices.
    """

    w_ix: np.ndarray
    w_fx: np.ndarray
    w_gx: np.ndarray
    w_ox: np.ndarray
    w_ih: np.ndarray
    w_fh: np.ndarray
    w_gh: np.ndarray
    w_oh: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_g: np.ndarray
    b_o: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w_ix.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.w_ix.shape[1]

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gate-stacked (in_dim, 4H), (H, 4H), (4H,) views for fast matmuls."""
        wx = np.concatenate([self.w_ix, self.w_fx, self.w_gx, self.w_ox], axis=1)
        wh = np.concatenate([self.w_ih, self.w_fh, self.w_gh, self.w_oh], axis=1)
        b = np.concatenate([self.b_i, self.b_f, self.b_g, self.b_o])
        return wx, wh, b


@dataclass
class NetworkParams:
    """All trainable tensors of the embedding network."""

    layers: list[LstmLayerParams]
    proj_w: np.ndarray
    proj_b: np.ndarray

    @property
    def shape(self) -> NetworkShape:
        return NetworkShape(
            input_dim=self.layers[0].input_dim,
            hidden_size=self.layers[0].hidden_size,
            num_layers=len(self.layers),
            embedding_dim=self.proj_w.shape[1],
        )

    @property
    def dtype(self) -> np.dtype:
        return self.proj_w.dtype

    def named_tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        for index, layer in enumerate(self.layers):
            for gate in _GATES:
                yield f"layer{index}.w_{gate}x", getattr(layer, f"w_{gate}x")
            for gate in _GATES:
                yield f"layer{index}.w_{gate}h", getattr(layer, f"w_{gate}h")
            for gate in _GATES:
                yield f"layer{index}.b_{gate}", getattr(layer, f"b_{gate}")
        yield "proj.w", self.proj_w
        yield "proj.b", self.proj_b

    def astype(self, dtype) -> "NetworkParams":
        layers = [
            LstmLayerParams(**{f.name: getattr(layer, f.name).astype(dtype)
                               for f in layer.__dataclass_fields__.values()})
            for layer in self.layers
        ]
        return NetworkParams(layers, self.proj_w.astype(dtype), self.proj_b.astype(dtype))


@dataclass
class GradientSet:
    """Gradients for every NetworkParams tensor plus the two loss scalars."""

    tensors: dict[str, np.ndarray]
    d_scale: float = 0.0
    d_bias: float = 0.0

    def matches(self, params: NetworkParams) -> bool:
        names = dict(params.named_tensors())
        return set(names) == set(self.tensors) and all(
            self.tensors[k].shape == names[k].shape for k in names
        )


def init_params(
    seed: int, shape: NetworkShape | None = None, dtype=np.float32
) -> NetworkParams:
    """Xavier-normal weights (variance 2/(fan_in + fan_out)), zero biases.

    The draw order is fixed so a seed fully determines every tensor.
    """
    shape = shape or NetworkShape()
    rng = np.random.default_rng(seed)

    def draw(fan_in: int, fan_out: int) -> np.ndarray:
        std = np.sqrt(2.0 / (fan_in + fan_out))
        return rng.normal(0.0, std, size=(fan_in, fan_out)).astype(dtype)

    layers = []
    in_dim = shape.input_dim
    h = shape.hidden_size
    for _ in range(shape.num_layers):
        wx = {gate: draw(in_dim, h) for gate in _GATES}
        wh = {gate: draw(h, h) for gate in _GATES}
        layers.append(
            LstmLayerParams(
                w_ix=wx["i"], w_fx=wx["f"], w_gx=wx["g"], w_ox=wx["o"],
                w_ih=wh["i"], w_fh=wh["f"], w_gh=wh["g"], w_oh=wh["o"],
                b_i=np.zeros(h, dtype=dtype), b_f=np.zeros(h, dtype=dtype),
                b_g=np.zeros(h, dtype=dtype), b_o=np.zeros(h, dtype=dtype),
            )
        )
        in_dim = h
    proj_w = draw(h, shape.embedding_dim)
    proj_b = np.zeros(shape.embedding_dim, dtype=dtype)
    return NetworkParams(layers, proj_w, proj_b)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def forward_batch(params: NetworkParams, segments: np.ndarray):
    """Embed a batch of segments (B, T, input_dim) -> (embeddings (B, E), cache)."""
    x = np.asarray(segments)
    if x.ndim != 3 or x.shape[2] != params.shape.input_dim:
        raise ValueError(
            f"expected input of shape (B, T, {params.shape.input_dim}), got {x.shape}"
        )
    if x.shape[1] < 1:
        raise ValueError("segments must contain at least one frame")
    dtype = params.dtype
    x = x.astype(dtype, copy=False)
    batch, frames, _ = x.shape
    h_size = params.shape.hidden_size

    layer_caches = []
    layer_input = x
    for layer in params.layers:
        wx, wh, b = layer.stacked()
        pre = layer_input @ wx + b  # (B, T, 4H), input contribution for all t at once
        i_act = np.empty((batch, frames, h_size), dtype=dtype)
        f_act = np.empty_like(i_act)
        g_act = np.empty_like(i_act)
        o_act = np.empty_like(i_act)
        c_seq = np.empty_like(i_act)
        tanh_c = np.empty_like(i_act)
        h_seq = np.empty_like(i_act)
        h_prev = np.zeros((batch, h_size), dtype=dtype)
        c_prev = np.zeros((batch, h_size), dtype=dtype)
        for t in range(frames):
            z = pre[:, t] + h_prev @ wh
            i_t = _sigmoid(z[:, :h_size])
            f_t = _sigmoid(z[:, h_size : 2 * h_size])
            g_t = np.tanh(z[:, 2 * h_size : 3 * h_size])
            o_t = _sigmoid(z[:, 3 * h_size :])
            c_t = f_t * c_prev + i_t * g_t
            tc = np.tanh(c_t)
            h_t = o_t * tc
            i_act[:, t], f_act[:, t], g_act[:, t], o_act[:, t] = i_t, f_t, g_t, o_t
            c_seq[:, t], tanh_c[:, t], h_seq[:, t] = c_t, tc, h_t
            h_prev, c_prev = h_t, c_t
        layer_caches.append(
            dict(x=layer_input, i=i_act, f=f_act, g=g_act, o=o_act, c=c_seq,
                 tanh_c=tanh_c, h=h_seq)
        )
        layer_input = h_seq

    h_last = layer_input[:, -1]
    y = h_last @ params.proj_w + params.proj_b
    if not np.all(np.isfinite(y)):
        raise DivergenceError("non-finite activation in projection output")
    norms = np.sqrt(np.sum(np.square(y.astype(np.float64)), axis=1))
    if np.any(norms == 0.0):
        rows = np.flatnonzero(norms == 0.0).tolist()
        raise DegenerateEmbeddingError(f"zero-norm embedding before normalization, rows {rows}")
    embeddings = (y / norms[:, None].astype(dtype)).astype(dtype)
    cache = dict(
        layers=layer_caches, h_last=h_last, y=y, norms=norms, embeddings=embeddings,
        batch=batch, frames=frames, shape=params.shape,
    )
    return embeddings, cache


def forward(params: NetworkParams, segment: np.ndarray):
    """Embed a single (T, input_dim) segment -> (embedding (E,), cache)."""
    segment = np.asarray(segment)
    if segment.ndim != 2:
        raise ValueError(f"expected a (T, input_dim) segment, got shape {segment.shape}")
    embeddings, cache = forward_batch(params, segment[None])
    return embeddings[0], cache


def backward_batch(
    params: NetworkParams, cache: dict, d_embeddings: np.ndarray
) -> GradientSet:
    """Exact gradients of sum(d_embeddings * embeddings) w.r.t. every tensor.

    d_embeddings is the upstream gradient on the unit-norm embeddings,
    shape (B, E). Chains through L2 normalization, the projection, and
    reverse-time LSTM recurrences over all layers.
    """
    if cache.get("shape") != params.shape:
        raise ValueError("cache does not match these parameters")
    d_emb = np.asarray(d_embeddings)
    batch, frames = cache["batch"], cache["frames"]
    if d_emb.shape != cache["embeddings"].shape:
        raise ValueError(
            f"expected upstream gradient of shape {cache['embeddings'].shape}, got {d_emb.shape}"
        )
    dtype = params.dtype
    d_emb = d_emb.astype(dtype, copy=False)
    e = cache["embeddings"]
    norms = cache["norms"].astype(dtype)

    # L2 normalization: dy = (de - e (e . de)) / ||y||
    inner = np.sum(e * d_emb, axis=1, keepdims=True, dtype=np.float64).astype(dtype)
    dy = (d_emb - e * inner) / norms[:, None]

    grads: dict[str, np.ndarray] = {}
    grads["proj.w"] = cache["h_last"].T @ dy
    grads["proj.b"] = dy.sum(axis=0)
    d_h_seq = np.zeros((batch, frames, params.shape.hidden_size), dtype=dtype)
    d_h_seq[:, -1] = dy @ params.proj_w.T

    for index in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[index]
        lc = cache["layers"][index]
        wx, wh, _ = layer.stacked()
        h_size = layer.hidden_size
        in_dim = layer.input_dim
        d_wx = np.zeros((in_dim, 4 * h_size), dtype=dtype)
        d_wh = np.zeros((h_size, 4 * h_size), dtype=dtype)
        d_b = np.zeros(4 * h_size, dtype=dtype)
        d_x_seq = np.zeros((batch, frames, in_dim), dtype=dtype)
        d_h_next = np.zeros((batch, h_size), dtype=dtype)
        d_c_next = np.zeros((batch, h_size), dtype=dtype)
        for t in range(frames - 1, -1, -1):
            i_t, f_t, g_t, o_t = lc["i"][:, t], lc["f"][:, t], lc["g"][:, t], lc["o"][:, t]
            tc = lc["tanh_c"][:, t]
            c_prev = lc["c"][:, t - 1] if t > 0 else np.zeros_like(tc)
            h_prev = lc["h"][:, t - 1] if t > 0 else np.zeros_like(tc)
            d_h = d_h_seq[:, t] + d_h_next
            d_o = d_h * tc
            d_c = d_c_next + d_h * o_t * (1.0 - tc * tc)
            d_f = d_c * c_prev
            d_i = d_c * g_t
            d_g = d_c * i_t
            d_z = np.concatenate(
                [
                    d_i * i_t * (1.0 - i_t),
                    d_f * f_t * (1.0 - f_t),
                    d_g * (1.0 - g_t * g_t),
                    d_o * o_t * (1.0 - o_t),
                ],
                axis=1,
            )
            x_t = lc["x"][:, t]
            d_wx += x_t.T @ d_z
            d_wh += h_prev.T @ d_z
            d_b += d_z.sum(axis=0)
            d_x_seq[:, t] = d_z @ wx.T
            d_h_next = d_z @ wh.T
            d_c_next = d_c * f_t
        for g_idx, gate in enumerate(_GATES):
            sl = slice(g_idx * h_size, (g_idx + 1) * h_size)
            grads[f"layer{index}.w_{gate}x"] = d_wx[:, sl]
            grads[f"layer{index}.w_{gate}h"] = d_wh[:, sl]
            grads[f"layer{index}.b_{gate}"] = d_b[sl]
        d_h_seq = d_x_seq
    return GradientSet(tensors=grads)


def global_gradient_norm(grads: GradientSet) -> float:
    """Global L2 norm over every tensor plus the two scalar gradients."""
    total = sum(float(np.sum(np.square(t.astype(np.float64)))) for t in grads.tensors.values())
    total += float(grads.d_scale) ** 2 + float(grads.d_bias) ** 2
    return float(np.sqrt(total))


def clip_gradients(grads: GradientSet, max_norm: float = 3.0) -> tuple[GradientSet, float]:
    """Scale the whole GradientSet so its global norm is at most max_norm.

    Returns (clipped gradients, pre-clip norm). Zero gradients pass through.
    """
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    norm = global_gradient_norm(grads)
    if not np.isfinite(norm):
        raise DivergenceError("non-finite gradient norm")
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    clipped = {name: tensor * tensor.dtype.type(scale) for name, tensor in grads.tensors.items()}
    return GradientSet(clipped, grads.d_scale * scale, grads.d_bias * scale), norm
