"""Utterance d-vectors, enrollment/verification trials, and EER scoring."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .audio import (
    VadConfig,
    detect_voice_activity,
    load_waveform,
    normalize_volume,
    prune_quiet_intervals,
    segment_partials,
)
from .features import extract_logmel, mel_filterbank
from .ge2e import DegenerateBatchError, cosine
from .lstm import NetworkParams, forward_batch

WINDOW_FRAMES = 160
WINDOW_HOP = 80


class UtteranceTooShortError(ValueError):
    """Raised when an utterance has fewer frames than one sliding window."""


@dataclass
class UtteranceDVector:
    """Window-averaged, re-normalized embedding of a whole utterance."""

    embedding: np.ndarray
    utterance_id: str = ""
    speaker_id: str = ""


@dataclass
class TrialRecord:
    kind: str  # "genuine" or "impostor"
    probe_speaker: str
    probe_utterance: str
    model_speaker: str
    score: float


@dataclass
class TrialScores:
    genuine: list[float]
    impostor: list[float]
    trials: list[TrialRecord] = field(default_factory=list)


@dataclass
class EerResult:
    eer_percent: float
    threshold: float
    thresholds: np.ndarray
    far_curve: np.ndarray
    frr_curve: np.ndarray
    n_genuine: int
    n_impostor: int


def utterance_dvector(
    params: NetworkParams,
    partial_features: Sequence[np.ndarray],
    utterance_id: str = "",
    speaker_id: str = "",
) -> UtteranceDVector:
    """Embed an utterance: concatenate its partials' features along time,
    slide a 160-frame window at hop 80 (kept while the window fits entirely),
    embed each window, average, and re-normalize."""
    if not partial_features:
        raise ValueError(f"utterance {utterance_id!r}: no partial features")
    stacked = np.concatenate([np.asarray(p) for p in partial_features], axis=0)
    total = stacked.shape[0]
    if total < WINDOW_FRAMES:
        raise UtteranceTooShortError(
            f"utterance {utterance_id!r}: {total} frames < window of {WINDOW_FRAMES}"
        )
    starts = range(0, total - WINDOW_FRAMES + 1, WINDOW_HOP)
    windows = np.stack([stacked[s : s + WINDOW_FRAMES] for s in starts])
    embeddings, _ = forward_batch(params, windows)
    mean = embeddings.astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise DegenerateBatchError(f"utterance {utterance_id!r}: windows averaged to zero")
    return UtteranceDVector(mean / norm, utterance_id, speaker_id)


def enroll(dvectors: Sequence[UtteranceDVector], enrollment_count: int) -> np.ndarray:
    """Speaker model: arithmetic mean of the first enrollment_count d-vectors."""
    if not 1 <= enrollment_count <= len(dvectors):
        raise ValueError(
            f"enrollment_count must be in [1, {len(dvectors)}], got {enrollment_count}"
        )
    return np.mean([d.embedding for d in dvectors[:enrollment_count]], axis=0)


def score_trials(speaker_dvectors: Mapping[str, Sequence[UtteranceDVector]]) -> TrialScores:
    """All verification trials for a test cohort.

    Genuine: each utterance against the leave-one-out centroid of its own
    speaker. Impostor: each utterance against every other speaker's full
    centroid. Raw cosine scores, no scale/offset.
    """
    ids = list(speaker_dvectors)
    if len(ids) < 2:
        raise ValueError(f"need at least 2 test speakers, got {len(ids)}")
    m_counts = {sid: len(speaker_dvectors[sid]) for sid in ids}
    m = m_counts[ids[0]]
    if m < 2 or any(count != m for count in m_counts.values()):
        raise ValueError(f"every speaker must contribute the same M >= 2 utterances: {m_counts}")
    stacks = {sid: np.stack([d.embedding for d in speaker_dvectors[sid]]) for sid in ids}
    full_centroids = {sid: stacks[sid].mean(axis=0) for sid in ids}
    genuine: list[float] = []
    impostor: list[float] = []
    trials: list[TrialRecord] = []
    for sid in ids:
        stack = stacks[sid]
        total = stack.sum(axis=0)
        for i, dvec in enumerate(speaker_dvectors[sid]):
            loo = (total - stack[i]) / (m - 1)
            score = cosine(dvec.embedding, loo)
            genuine.append(score)
            trials.append(TrialRecord("genuine", sid, dvec.utterance_id, sid, score))
        for other in ids:
            if other == sid:
                continue
            for dvec in speaker_dvectors[sid]:
                score = cosine(dvec.embedding, full_centroids[other])
                impostor.append(score)
                trials.append(TrialRecord("impostor", sid, dvec.utterance_id, other, score))
    return TrialScores(genuine=genuine, impostor=impostor, trials=trials)


def _error_rates(genuine: np.ndarray, impostor: np.ndarray, threshold: float):
    frr = int(np.count_nonzero(genuine < threshold))
    far = int(np.count_nonzero(impostor >= threshold))
    return far, frr


def compute_eer(scores: TrialScores) -> EerResult:
    """Equal error rate by threshold sweep.

    Candidate thresholds are every distinct score, midpoints between
    neighbors, and sentinels past both ends. FRR(t) is the fraction of
    genuine scores below t, FAR(t) the fraction of impostor scores at or
    above t; their difference is non-increasing in t, so it crosses zero
    once. The crossing is interpolated linearly in exact rational arithmetic;
    the reported threshold is the sweep candidate minimizing |FAR - FRR|.
    """
    genuine = np.asarray(scores.genuine, dtype=np.float64)
    impostor = np.asarray(scores.impostor, dtype=np.float64)
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("compute_eer needs at least one genuine and one impostor score")
    values = np.unique(np.concatenate([genuine, impostor]))
    mids = (values[:-1] + values[1:]) / 2.0
    candidates = np.unique(
        np.concatenate([[values[0] - 1.0], values, mids, [values[-1] + 1.0]])
    )
    n_gen, n_imp = genuine.size, impostor.size
    far_counts = np.empty(candidates.size, dtype=np.int64)
    frr_counts = np.empty(candidates.size, dtype=np.int64)
    for idx, threshold in enumerate(candidates):
        far_counts[idx], frr_counts[idx] = _error_rates(genuine, impostor, threshold)
    far = far_counts / n_imp
    frr = frr_counts / n_gen
    diff = far - frr

    best = int(np.argmin(np.abs(diff)))
    threshold = float(candidates[best])

    # Exact rational interpolation at the sign change of FAR - FRR.
    diffs_exact = [
        Fraction(int(far_counts[k]), n_imp) - Fraction(int(frr_counts[k]), n_gen)
        for k in range(candidates.size)
    ]
    eer_fraction = None
    for k in range(candidates.size):
        if diffs_exact[k] == 0:
            eer_fraction = (
                Fraction(int(far_counts[k]), n_imp) + Fraction(int(frr_counts[k]), n_gen)
            ) / 2
            break
        if diffs_exact[k] < 0:
            prev = k - 1  # sentinel guarantees diffs_exact[0] = +1 > 0
            d1, d2 = diffs_exact[prev], diffs_exact[k]
            alpha = d1 / (d1 - d2)
            far1 = Fraction(int(far_counts[prev]), n_imp)
            far2 = Fraction(int(far_counts[k]), n_imp)
            frr1 = Fraction(int(frr_counts[prev]), n_gen)
            frr2 = Fraction(int(frr_counts[k]), n_gen)
            far_at = far1 + alpha * (far2 - far1)
            frr_at = frr1 + alpha * (frr2 - frr1)
            eer_fraction = (far_at + frr_at) / 2
            break
    assert eer_fraction is not None  # sentinels force a crossing
    return EerResult(
        eer_percent=float(100 * eer_fraction),
        threshold=threshold,
        thresholds=candidates,
        far_curve=far,
        frr_curve=frr,
        n_genuine=n_gen,
        n_impostor=n_imp,
    )


@dataclass
class EvaluationResult:
    eer: EerResult
    scores: TrialScores
    per_speaker_eer: dict[str, float]
    skipped: dict[str, list[str]]


def _probe_restricted_eer(scores: TrialScores, speaker: str) -> float | None:
    genuine = [t.score for t in scores.trials if t.kind == "genuine" and t.probe_speaker == speaker]
    impostor = [
        t.score for t in scores.trials if t.kind == "impostor" and t.probe_speaker == speaker
    ]
    if not genuine or not impostor:
        return None
    return compute_eer(TrialScores(genuine, impostor)).eer_percent


def evaluate(
    params: NetworkParams,
    utterances_by_speaker: Mapping[str, Sequence[tuple[str, Path]]],
    m_utterances: int = 2,
    seed: int = 0,
    vad_config: VadConfig | None = None,
) -> EvaluationResult:
    """Full evaluation: preprocess each utterance, embed it, run all trials.

    Speakers with more than m_utterances usable utterances contribute a
    seeded sample of exactly m_utterances; a speaker with fewer raises,
    naming the speaker and the reasons individual utterances were unusable.
    """
    if m_utterances < 2:
        raise ValueError("m_utterances must be >= 2 for leave-one-out scoring")
    vad_config = vad_config or VadConfig()
    rng = np.random.default_rng([seed, 2])
    bank = mel_filterbank()
    dvectors: dict[str, list[UtteranceDVector]] = {}
    skipped: dict[str, list[str]] = {}
    for sid in sorted(utterances_by_speaker):
        usable: list[UtteranceDVector] = []
        reasons: list[str] = []
        for utt_id, path in sorted(utterances_by_speaker[sid]):
            try:
                waveform = normalize_volume(load_waveform(path))
                intervals = prune_quiet_intervals(
                    detect_voice_activity(waveform, vad_config),
                    waveform,
                    vad_config.prune_threshold_db,
                )
                partials = segment_partials(waveform, intervals, utt_id)
                if not partials:
                    raise UtteranceTooShortError(
                        f"utterance {utt_id!r}: no partial of sufficient length"
                    )
                feats = [extract_logmel(p, waveform.sample_rate, bank) for p in partials]
                usable.append(utterance_dvector(params, feats, utt_id, sid))
            except (UtteranceTooShortError, ValueError) as exc:
                reasons.append(str(exc))
        if len(usable) < m_utterances:
            detail = f" ({'; '.join(reasons)})" if reasons else ""
            raise ValueError(
                f"speaker {sid!r} has {len(usable)} usable utterances, "
                f"needs {m_utterances}{detail}"
            )
        if len(usable) > m_utterances:
            picks = sorted(rng.choice(len(usable), m_utterances, replace=False))
            usable = [usable[k] for k in picks]
        dvectors[sid] = usable
        if reasons:
            skipped[sid] = reasons
    scores = score_trials(dvectors)
    per_speaker = {}
    for sid in dvectors:
        value = _probe_restricted_eer(scores, sid)
        if value is not None:
            per_speaker[sid] = value
    return EvaluationResult(
        eer=compute_eer(scores), scores=scores, per_speaker_eer=per_speaker, skipped=skipped
    )


def write_score_dump(path: str | Path, scores: TrialScores) -> None:
    """Per-trial CSV with 9-significant-digit scores."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "probe_speaker", "probe_utterance", "model_speaker", "score"])
        for t in scores.trials:
            writer.writerow(
                [t.kind, t.probe_speaker, t.probe_utterance, t.model_speaker, f"{t.score:.9g}"]
            )


def write_eer_report(path: str | Path, result: EerResult) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eer_percent", "threshold", "n_genuine", "n_impostor"])
        writer.writerow(
            [f"{result.eer_percent:.9g}", f"{result.threshold:.9g}",
             result.n_genuine, result.n_impostor]
        )
