"""Waveform I/O, peak normalization, and energy-based voice activity detection."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CANONICAL_SAMPLE_RATE = 16_000
FRAME_WINDOW_MS = 25.0
FRAME_HOP_MS = 10.0
# Partials shorter than this many analysis frames carry too little speaker
# evidence and are dropped at segmentation time.
MIN_PARTIAL_FRAMES = 180

_INT16_SCALE = 32768.0


class AudioFormatError(ValueError):
    """Raised for WAV input that is not mono 16-bit PCM at the expected rate."""


@dataclass
class Waveform:
    """Mono audio as float samples in [-1, 1] plus its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"waveform samples must be 1-D, got shape {self.samples.shape}")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform samples must be finite")

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class VadConfig:
    """Energy VAD tuning: window/silence/smoothing lengths in ms, threshold in dB."""

    window_length_ms: float = 30.0
    max_silence_length_ms: float = 6.0
    smoothing_window_ms: float = 8.0
    prune_threshold_db: float = -30.0

    def __post_init__(self) -> None:
        for name in ("window_length_ms", "max_silence_length_ms", "smoothing_window_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.prune_threshold_db >= 0:
            raise ValueError("prune_threshold_db must be negative (dB relative to peak)")


@dataclass
class PartialUtterance:
    """A contiguous voiced stretch cut from a source utterance."""

    samples: np.ndarray
    source_utterance_id: str
    offset: int

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.offset < 0:
            raise ValueError("offset must be non-negative")


def load_waveform(path: str | Path, expected_rate: int | None = CANONICAL_SAMPLE_RATE) -> Waveform:
    """Read a mono 16-bit PCM WAV file.

    Rejects multi-channel audio, other sample widths, compressed payloads,
    and (unless expected_rate is None) rates other than 16 kHz.
    """
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            sample_width = wav.getsampwidth()
            comp_type = wav.getcomptype()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except wave.Error as exc:
        raise AudioFormatError(f"{path}: corrupt or non-RIFF WAV header ({exc})") from exc
    if n_channels != 1:
        raise AudioFormatError(f"{path}: expected mono audio, got {n_channels} channels")
    if sample_width != 2:
        raise AudioFormatError(f"{path}: expected 16-bit samples, got {8 * sample_width}-bit")
    if comp_type != "NONE":
        raise AudioFormatError(f"{path}: compressed WAV payloads are unsupported ({comp_type})")
    if expected_rate is not None and rate != expected_rate:
        raise AudioFormatError(f"{path}: expected {expected_rate} Hz, got {rate} Hz")
    ints = np.frombuffer(raw, dtype="<i2")
    return Waveform(ints.astype(np.float64) / _INT16_SCALE, rate)


def save_waveform(waveform: Waveform, path: str | Path) -> None:
    """Write a mono 16-bit PCM WAV file; quantization round-trips with load_waveform."""
    quantized = np.clip(np.rint(waveform.samples * _INT16_SCALE), -32768, 32767).astype("<i2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(waveform.sample_rate)
        wav.writeframes(quantized.tobytes())


def normalize_volume(waveform: Waveform) -> Waveform:
    """Scale so the peak absolute sample is 1.0; silent input is returned unchanged."""
    peak = float(np.max(np.abs(waveform.samples))) if waveform.samples.size else 0.0
    if peak == 0.0:
        return Waveform(waveform.samples.copy(), waveform.sample_rate)
    return Waveform(waveform.samples / peak, waveform.sample_rate)


def _moving_average(values: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average with edge-aware window lengths."""
    if width <= 1:
        return values.astype(np.float64, copy=True)
    n = values.size
    csum = np.concatenate(([0.0], np.cumsum(values, dtype=np.float64)))
    left = width // 2
    right = width - 1 - left
    hi = np.minimum(np.arange(n) + right + 1, n)
    lo = np.maximum(np.arange(n) - left, 0)
    return (csum[hi] - csum[lo]) / (hi - lo)


def _samples_for_ms(milliseconds: float, sample_rate: int) -> int:
    return max(1, int(round(milliseconds * sample_rate / 1000.0)))


def detect_voice_activity(
    waveform: Waveform, config: VadConfig | None = None
) -> list[tuple[int, int]]:
    """Find active speech intervals by thresholding smoothed short-time energy.

    Energy is averaged over the VAD window, smoothed again over the smoothing
    window, and compared against prune_threshold_db relative to the waveform
    peak. Gaps shorter than max_silence_length_ms are merged. Returns sorted,
    disjoint half-open sample intervals.
    """
    config = config or VadConfig()
    samples = waveform.samples
    if samples.size == 0:
        return []
    peak = float(np.max(np.abs(samples)))
    if peak == 0.0:
        return []
    window = _samples_for_ms(config.window_length_ms, waveform.sample_rate)
    smoothing = _samples_for_ms(config.smoothing_window_ms, waveform.sample_rate)
    max_gap = _samples_for_ms(config.max_silence_length_ms, waveform.sample_rate)

    power = _moving_average(samples * samples, window)
    power = _moving_average(power, smoothing)
    threshold = (10.0 ** (config.prune_threshold_db / 10.0)) * peak * peak
    active = power > threshold

    edges = np.flatnonzero(np.diff(np.concatenate(([0], active.view(np.int8), [0]))))
    intervals = [(int(edges[k]), int(edges[k + 1])) for k in range(0, edges.size, 2)]

    merged: list[tuple[int, int]] = []
    for start, end in intervals:
        if merged and start - merged[-1][1] < max_gap:
            merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))
    return merged


def prune_quiet_intervals(
    intervals: list[tuple[int, int]],
    waveform: Waveform,
    threshold_db: float = -30.0,
) -> list[tuple[int, int]]:
    """Drop intervals whose RMS sits below threshold_db relative to the waveform peak."""
    peak = float(np.max(np.abs(waveform.samples))) if waveform.samples.size else 0.0
    if peak == 0.0:
        return []
    kept = []
    for start, end in intervals:
        chunk = waveform.samples[start:end]
        if chunk.size == 0:
            continue
        mean_power = float(np.mean(chunk * chunk, dtype=np.float64))
        if mean_power <= 0.0:
            continue
        level_db = 10.0 * np.log10(mean_power / (peak * peak))
        if level_db >= threshold_db:
            kept.append((start, end))
    return kept


def frame_count(n_samples: int, sample_rate: int = CANONICAL_SAMPLE_RATE) -> int:
    """Number of 25 ms / 10 ms-hop analysis frames that fit in n_samples."""
    window = int(round(FRAME_WINDOW_MS * sample_rate / 1000.0))
    hop = int(round(FRAME_HOP_MS * sample_rate / 1000.0))
    if n_samples < window:
        return 0
    return (n_samples - window) // hop + 1


def segment_partials(
    waveform: Waveform,
    intervals: list[tuple[int, int]],
    utterance_id: str = "",
    min_frames: int = MIN_PARTIAL_FRAMES,
) -> list[PartialUtterance]:
    """Cut intervals into partial utterances, keeping those with enough frames."""
    partials = []
    for start, end in intervals:
        chunk = waveform.samples[start:end]
        if frame_count(chunk.size, waveform.sample_rate) >= min_frames:
            partials.append(PartialUtterance(chunk.copy(), utterance_id, start))
    return partials
