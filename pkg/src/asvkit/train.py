"""Batch sampling, Adam, and the training loop for the embedding network."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import checkpoint as ckpt
from .ge2e import GE2EScalars, MIN_SCALE, ge2e_loss_gradients
from .lstm import (
    DivergenceError,
    GradientSet,
    NetworkParams,
    NetworkShape,
    backward_batch,
    clip_gradients,
    forward_batch,
    init_params,
)

LR_SOFT_RANGE = (1e-5, 1e-4)


@dataclass
class BatchSpec:
    """How a training batch is assembled from the feature pool."""

    n_speakers: int = 16
    m_utterances: int = 4
    min_frames: int = 140
    max_frames: int = 180

    def __post_init__(self) -> None:
        if self.n_speakers < 2:
            raise ValueError("n_speakers must be >= 2 (loss needs impostor columns)")
        if self.m_utterances < 2:
            raise ValueError("m_utterances must be >= 2 (leave-one-out centroid)")
        if not 1 <= self.min_frames <= self.max_frames:
            raise ValueError("need 1 <= min_frames <= max_frames")


@dataclass
class TrainConfig:
    steps: int = 1000
    learning_rate: float = 5e-5
    seed: int = 0
    clip_norm: float = 3.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    checkpoint_interval: int = 500

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise ValueError("betas must lie in [0, 1)")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if not LR_SOFT_RANGE[0] <= self.learning_rate <= LR_SOFT_RANGE[1]:
            warnings.warn(
                f"learning_rate {self.learning_rate:g} is outside the usual "
                f"range [{LR_SOFT_RANGE[0]:g}, {LR_SOFT_RANGE[1]:g}]",
                stacklevel=2,
            )


@dataclass
class TrainBatch:
    """One sampled batch: (N, M, L, dim) features plus provenance."""

    features: np.ndarray
    speaker_ids: list[str]
    frame_length: int


@dataclass
class TraceRow:
    step: int
    loss: float
    grad_norm_preclip: float
    frame_length: int
    learning_rate: float


@dataclass
class TrainResult:
    params: NetworkParams
    scalars: GE2EScalars
    trace: list[TraceRow]
    init_digest: str
    final_digest: str


FeaturePool = Mapping[str, Sequence[np.ndarray]]


def eligible_speakers(pool: FeaturePool, spec: BatchSpec) -> list[str]:
    """Speakers with at least one partial long enough for the largest crop."""
    return sorted(
        sid for sid, parts in pool.items()
        if any(p.shape[0] >= spec.max_frames for p in parts)
    )


def sample_batch(pool: FeaturePool, spec: BatchSpec, rng: np.random.Generator) -> TrainBatch:
    """Draw N speakers, M partials each (with replacement only when a speaker
    is short), and crop every partial to one shared random frame length."""
    candidates = eligible_speakers(pool, spec)
    if len(candidates) < spec.n_speakers:
        raise ValueError(
            f"need {spec.n_speakers} eligible speakers, pool has {len(candidates)}"
        )
    length = int(rng.integers(spec.min_frames, spec.max_frames + 1))
    chosen = [candidates[k] for k in rng.choice(len(candidates), spec.n_speakers, replace=False)]
    dim = pool[chosen[0]][0].shape[1]
    feats = np.empty((spec.n_speakers, spec.m_utterances, length, dim), dtype=np.float32)
    for s_idx, sid in enumerate(chosen):
        usable = [p for p in pool[sid] if p.shape[0] >= length]
        replace = len(usable) < spec.m_utterances
        picks = rng.choice(len(usable), spec.m_utterances, replace=replace)
        for m_idx, p_idx in enumerate(picks):
            part = usable[int(p_idx)]
            start = int(rng.integers(0, part.shape[0] - length + 1))
            feats[s_idx, m_idx] = part[start : start + length]
    return TrainBatch(features=feats, speaker_ids=chosen, frame_length=length)


@dataclass
class AdamState:
    step: int
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    scalar_moments: dict[str, list[float]] = field(default_factory=dict)


def init_adam_state(params: NetworkParams) -> AdamState:
    first = {name: np.zeros_like(t) for name, t in params.named_tensors()}
    second = {name: np.zeros_like(t) for name, t in params.named_tensors()}
    return AdamState(
        step=0,
        first_moment=first,
        second_moment=second,
        scalar_moments={"scale": [0.0, 0.0], "bias": [0.0, 0.0]},
    )


def adam_step(
    params: NetworkParams,
    scalars: GE2EScalars,
    grads: GradientSet,
    state: AdamState,
    config: TrainConfig,
) -> None:
    """One bias-corrected Adam update, in place; clamps the cosine scale."""
    if not grads.matches(params):
        raise ValueError("gradient set does not match parameter tensors")
    flat_ok = all(np.all(np.isfinite(t)) for t in grads.tensors.values())
    if not flat_ok or not np.isfinite(grads.d_scale) or not np.isfinite(grads.d_bias):
        raise DivergenceError("non-finite gradient passed to adam_step")
    state.step += 1
    t = state.step
    correction1 = 1.0 - config.beta1**t
    correction2 = 1.0 - config.beta2**t
    for name, tensor in params.named_tensors():
        g = grads.tensors[name]
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * np.square(g)
        m_hat = m / correction1
        v_hat = v / correction2
        tensor -= (config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)).astype(
            tensor.dtype
        )

    def update_scalar(key: str, value: float, grad: float) -> float:
        m_s, v_s = state.scalar_moments[key]
        m_s = config.beta1 * m_s + (1.0 - config.beta1) * grad
        v_s = config.beta2 * v_s + (1.0 - config.beta2) * grad * grad
        state.scalar_moments[key] = [m_s, v_s]
        m_hat = m_s / correction1
        v_hat = v_s / correction2
        return value - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)

    scalars.scale = max(update_scalar("scale", scalars.scale, grads.d_scale), MIN_SCALE)
    scalars.bias = update_scalar("bias", scalars.bias, grads.d_bias)


def write_loss_trace(path: str | Path, trace: Sequence[TraceRow]) -> None:
    """Loss trace CSV: step, loss, pre-clip gradient norm, crop length, lr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "grad_norm_preclip", "frame_length", "learning_rate"])
        for row in trace:
            writer.writerow(
                [row.step, f"{row.loss:.9g}", f"{row.grad_norm_preclip:.9g}",
                 row.frame_length, f"{row.learning_rate:.9g}"]
            )


def train(
    pool: FeaturePool,
    config: TrainConfig,
    spec: BatchSpec | None = None,
    shape: NetworkShape | None = None,
    checkpoint_dir: str | Path | None = None,
    trace_path: str | Path | None = None,
) -> TrainResult:
    """Train from a fresh seeded initialization over a speaker feature pool.

    Every step: sample a batch, embed it, take loss gradients, backpropagate,
    clip the global gradient norm, and apply Adam. Checkpoints are written
    every config.checkpoint_interval steps and at the end when a directory is
    given. Identical (pool, config, spec, shape) reruns are bit-identical.
    """
    spec = spec or BatchSpec()
    shape = shape or NetworkShape()
    if len(pool) < 2:
        raise ValueError("training needs a pool with at least 2 speakers")
    if len(eligible_speakers(pool, spec)) < spec.n_speakers:
        raise ValueError(
            f"need {spec.n_speakers} eligible speakers, pool has "
            f"{len(eligible_speakers(pool, spec))}"
        )
    params = init_params(config.seed, shape)
    scalars = GE2EScalars()
    init_digest = ckpt.checkpoint_digest(params, scalars)
    state = init_adam_state(params)
    batch_rng = np.random.default_rng([config.seed, 1])
    trace: list[TraceRow] = []
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None

    for step in range(1, config.steps + 1):
        batch = sample_batch(pool, spec, batch_rng)
        n, m, length, dim = batch.features.shape
        flat = batch.features.reshape(n * m, length, dim)
        embeddings, cache = forward_batch(params, flat)
        result = ge2e_loss_gradients(embeddings.reshape(n, m, -1).astype(np.float64), scalars)
        if not np.isfinite(result.loss):
            raise DivergenceError(f"non-finite loss at step {step}")
        grads = backward_batch(
            params, cache, result.d_embeddings.reshape(n * m, -1).astype(params.dtype)
        )
        grads.d_scale = result.d_scale
        grads.d_bias = result.d_bias
        clipped, preclip = clip_gradients(grads, config.clip_norm)
        adam_step(params, scalars, clipped, state, config)
        trace.append(TraceRow(step, result.loss, preclip, length, config.learning_rate))
        if ckpt_dir is not None and config.checkpoint_interval > 0:
            if step % config.checkpoint_interval == 0:
                ckpt.save_checkpoint(ckpt_dir / f"step{step:06d}.ckpt", params, scalars)

    if ckpt_dir is not None:
        ckpt.save_checkpoint(ckpt_dir / "final.ckpt", params, scalars)
    if trace_path is not None:
        write_loss_trace(trace_path, trace)
    return TrainResult(
        params=params,
        scalars=scalars,
        trace=trace,
        init_digest=init_digest,
        final_digest=ckpt.checkpoint_digest(params, scalars),
    )
