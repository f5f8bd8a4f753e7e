"""Generalized end-to-end similarity matrix, loss, and analytic gradients.

A batch of embeddings is arranged (speakers N, utterances-per-speaker M,
dim). Each embedding is scored against every speaker centroid with a scaled,
shifted cosine; the target column uses the leave-one-out centroid so an
utterance never votes for itself. The loss is softmax cross-entropy over
columns, averaged over the N*M rows. Gradients are exact, including the
paths through full and leave-one-out centroids, and are finite-difference
checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INIT_SCALE = 10.0
INIT_BIAS = -5.0
MIN_SCALE = 1e-4

_NORM_EPS = 1e-12


class DegenerateBatchError(ValueError):
    """Raised when a centroid or embedding has (numerically) zero norm."""


@dataclass
class GE2EScalars:
    """Trainable cosine scale/offset; scale is kept strictly positive."""

    scale: float = INIT_SCALE
    bias: float = INIT_BIAS

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass
class SimilarityMatrix:
    """Row-major (N*M, N) similarity scores; row (j, i) maps to index j*M + i."""

    values: np.ndarray
    n_speakers: int
    m_utterances: int


@dataclass
class GE2EGradients:
    loss: float
    d_embeddings: np.ndarray
    d_scale: float
    d_bias: float


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors; rejects zero-norm input."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a < _NORM_EPS or norm_b < _NORM_EPS:
        raise DegenerateBatchError("cosine undefined for zero-norm vector")
    return float(a @ b / (norm_a * norm_b))


def centroid(embeddings: np.ndarray) -> np.ndarray:
    """Arithmetic mean of (M, dim) embeddings; deliberately not re-normalized."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 1:
        raise ValueError(f"expected (M, dim) with M >= 1, got shape {embeddings.shape}")
    return embeddings.mean(axis=0)


def leave_one_out_centroid(embeddings: np.ndarray, index: int) -> np.ndarray:
    """Mean of (M, dim) embeddings excluding row index; requires M >= 2."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 2:
        raise ValueError(f"leave-one-out needs M >= 2, got shape {embeddings.shape}")
    if not 0 <= index < embeddings.shape[0]:
        raise IndexError(f"index {index} out of range for M={embeddings.shape[0]}")
    total = embeddings.sum(axis=0)
    return (total - embeddings[index]) / (embeddings.shape[0] - 1)


def _geometry(embeddings: np.ndarray) -> dict:
    """Shared cosine geometry: centroids, norms, unit vectors, cosine matrix."""
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 3:
        raise ValueError(f"expected embeddings of shape (N, M, dim), got {emb.shape}")
    n, m, _ = emb.shape
    if n < 1 or m < 2:
        raise DegenerateBatchError(
            f"need N >= 1 speakers and M >= 2 utterances, got N={n}, M={m}"
        )
    emb_norm = np.linalg.norm(emb, axis=2)
    if np.any(emb_norm < _NORM_EPS):
        raise DegenerateBatchError("zero-norm embedding in batch")
    full = emb.mean(axis=1)  # (N, dim)
    full_norm = np.linalg.norm(full, axis=1)
    if np.any(full_norm < _NORM_EPS):
        raise DegenerateBatchError("zero-norm speaker centroid (degenerate batch)")
    loo = (emb.sum(axis=1, keepdims=True) - emb) / (m - 1)  # (N, M, dim)
    loo_norm = np.linalg.norm(loo, axis=2)
    if np.any(loo_norm < _NORM_EPS):
        raise DegenerateBatchError("zero-norm leave-one-out centroid (degenerate batch)")
    unit_emb = emb / emb_norm[:, :, None]
    unit_full = full / full_norm[:, None]
    unit_loo = loo / loo_norm[:, :, None]
    cos = np.einsum("jie,ke->jik", unit_emb, unit_full)  # cos(e_ji, c_k)
    diag_cos = np.einsum("jie,jie->ji", unit_emb, unit_loo)
    rows = np.arange(n)
    cos[rows, :, rows] = diag_cos
    return dict(
        emb=emb, n=n, m=m, emb_norm=emb_norm, unit_emb=unit_emb,
        full_norm=full_norm, unit_full=unit_full,
        loo_norm=loo_norm, unit_loo=unit_loo, cos=cos,
    )


def similarity_matrix(embeddings: np.ndarray, scalars: GE2EScalars) -> SimilarityMatrix:
    """Scaled-cosine scores of every utterance against every speaker centroid.

    Off-target columns use the full M-utterance centroid; the target column
    uses the leave-one-out centroid of the utterance's own speaker.
    """
    geo = _geometry(embeddings)
    values = scalars.scale * geo["cos"] + scalars.bias
    return SimilarityMatrix(
        values.reshape(geo["n"] * geo["m"], geo["n"]), geo["n"], geo["m"]
    )


def ge2e_loss(matrix: SimilarityMatrix) -> float:
    """Mean softmax cross-entropy over rows, stabilized by max subtraction."""
    values = np.asarray(matrix.values, dtype=np.float64)
    n, m = matrix.n_speakers, matrix.m_utterances
    if values.shape != (n * m, n):
        raise ValueError(f"expected shape ({n * m}, {n}), got {values.shape}")
    targets = np.repeat(np.arange(n), m)
    row_max = values.max(axis=1, keepdims=True)
    lse = np.log(np.sum(np.exp(values - row_max), axis=1)) + row_max[:, 0]
    row_losses = lse - values[np.arange(n * m), targets]
    return float(row_losses.mean())


def ge2e_loss_gradients(embeddings: np.ndarray, scalars: GE2EScalars) -> GE2EGradients:
    """Loss plus exact gradients w.r.t. embeddings and the two scalars.

    The embedding gradient accounts for all three coupling paths: the
    utterance's own cosine rows, its contribution to the speaker's full
    centroid (scored by other speakers' rows), and its contribution to the
    leave-one-out centroids of its sibling utterances. The bias gradient is
    identically zero because a per-row constant shift cancels in the softmax
    cross-entropy; it is computed and returned anyway as a consistency check.
    """
    geo = _geometry(embeddings)
    n, m = geo["n"], geo["m"]
    cos = geo["cos"]
    scores = scalars.scale * cos + scalars.bias
    row_max = scores.max(axis=2, keepdims=True)
    exp_shift = np.exp(scores - row_max)
    softmax = exp_shift / exp_shift.sum(axis=2, keepdims=True)
    lse = np.log(exp_shift.sum(axis=2)) + row_max[:, :, 0]
    rows = np.arange(n)
    loss = float((lse - scores[rows, :, rows]).mean())

    resid = softmax.copy()  # (N, M, N): softmax minus one-hot target
    resid[rows, :, rows] -= 1.0
    d_scale = float(np.sum(resid * cos) / (n * m))
    d_bias = float(np.sum(resid) / (n * m))
    coeff = resid * (scalars.scale / (n * m))  # dL/d cos[j, i, k]

    unit_emb, emb_norm = geo["unit_emb"], geo["emb_norm"]
    unit_full, full_norm = geo["unit_full"], geo["full_norm"]
    unit_loo, loo_norm = geo["unit_loo"], geo["loo_norm"]

    coeff_off = coeff.copy()
    coeff_off[rows, :, rows] = 0.0
    coeff_diag = coeff[rows, :, rows]  # (N, M)

    d_emb = np.zeros_like(geo["emb"])

    # Path 1a: rows of utterance (j, i) against other speakers' full centroids.
    sum_off = np.einsum("jik,ke->jie", coeff_off, unit_full)
    weight_off = np.sum(coeff_off * cos, axis=2)
    d_emb += (sum_off - weight_off[:, :, None] * unit_emb) / emb_norm[:, :, None]

    # Path 1b: the target column against the own leave-one-out centroid.
    diag_cos = cos[rows, :, rows]
    d_emb += (
        coeff_diag[:, :, None]
        * (unit_loo - diag_cos[:, :, None] * unit_emb)
        / emb_norm[:, :, None]
    )

    # Path 2: gradient into full centroid c_k from all rows with j != k,
    # then spread uniformly over the M embeddings that form c_k.
    d_full = (
        np.einsum("jik,jie->ke", coeff_off, unit_emb)
        - np.einsum("jik,jik->k", coeff_off, cos)[:, None] * unit_full
    ) / full_norm[:, None]
    d_emb += d_full[:, None, :] / m

    # Path 3: gradient into the leave-one-out centroid of row (j, i'), spread
    # over the sibling embeddings i != i'.
    d_loo = (
        coeff_diag[:, :, None] * (unit_emb - diag_cos[:, :, None] * unit_loo)
    ) / loo_norm[:, :, None]
    sibling_total = d_loo.sum(axis=1, keepdims=True)
    d_emb += (sibling_total - d_loo) / (m - 1)

    return GE2EGradients(loss=loss, d_embeddings=d_emb, d_scale=d_scale, d_bias=d_bias)
