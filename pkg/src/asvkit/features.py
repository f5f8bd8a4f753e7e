"""Log-mel filterbank features and the binary feature-dump format."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .audio import CANONICAL_SAMPLE_RATE, FRAME_HOP_MS, FRAME_WINDOW_MS, PartialUtterance

N_MELS = 40
N_FFT = 512
MEL_FMIN_HZ = 0.0
MEL_FMAX_HZ = 8000.0
LOG_FLOOR = 1e-10

_DUMP_MAGIC = b"LMEL"
_DUMP_VERSION = 1


class FeatureDumpError(ValueError):
    """Raised for malformed feature-dump files."""


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int = N_MELS,
    n_fft: int = N_FFT,
    sample_rate: int = CANONICAL_SAMPLE_RATE,
    fmin_hz: float = MEL_FMIN_HZ,
    fmax_hz: float = MEL_FMAX_HZ,
) -> np.ndarray:
    """Triangular mel filters (n_mels, n_fft//2 + 1) with mel-spaced edges."""
    if not 0 <= fmin_hz < fmax_hz <= sample_rate / 2:
        raise ValueError(f"need 0 <= fmin < fmax <= Nyquist, got [{fmin_hz}, {fmax_hz}]")
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), n_mels + 2))
    bin_hz = np.arange(n_fft // 2 + 1, dtype=np.float64) * sample_rate / n_fft
    bank = np.zeros((n_mels, bin_hz.size), dtype=np.float64)
    for k in range(n_mels):
        lower, center, upper = edges_hz[k], edges_hz[k + 1], edges_hz[k + 2]
        rising = (bin_hz - lower) / (center - lower)
        falling = (upper - bin_hz) / (upper - center)
        bank[k] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def filter_center_frequencies(
    n_mels: int = N_MELS, fmin_hz: float = MEL_FMIN_HZ, fmax_hz: float = MEL_FMAX_HZ
) -> np.ndarray:
    """Center frequency in Hz of each triangular mel filter."""
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), n_mels + 2))
    return edges_hz[1:-1]


def frame_signal(samples: np.ndarray, window: int, hop: int) -> np.ndarray:
    """Slice a 1-D signal into overlapping frames, shape (n_frames, window)."""
    n = (samples.size - window) // hop + 1 if samples.size >= window else 0
    if n <= 0:
        return np.zeros((0, window), dtype=np.float64)
    idx = np.arange(window)[None, :] + hop * np.arange(n)[:, None]
    return samples[idx]


def extract_logmel(
    partial: PartialUtterance | np.ndarray,
    sample_rate: int = CANONICAL_SAMPLE_RATE,
    filterbank: np.ndarray | None = None,
) -> np.ndarray:
    """Natural-log mel filterbank energies, shape (n_frames, N_MELS), float32.

    25 ms Hann-windowed frames at a 10 ms hop, 512-point FFT magnitude
    squared, triangular mel filters, and a log floor so silence stays finite.
    """
    samples = partial.samples if isinstance(partial, PartialUtterance) else np.asarray(partial)
    window = int(round(FRAME_WINDOW_MS * sample_rate / 1000.0))
    hop = int(round(FRAME_HOP_MS * sample_rate / 1000.0))
    frames = frame_signal(samples.astype(np.float64), window, hop)
    if filterbank is None:
        filterbank = mel_filterbank(sample_rate=sample_rate)
    spectrum = np.fft.rfft(frames * np.hanning(window), n=N_FFT, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    energies = power @ filterbank.T
    return np.log(np.maximum(energies, LOG_FLOOR)).astype(np.float32)


def write_feature_dump(path: str | Path, features: np.ndarray) -> None:
    """Write a feature matrix as magic 'LMEL', u32 version/rows/cols, f32 LE row-major."""
    features = np.ascontiguousarray(features, dtype="<f4")
    if features.ndim != 2:
        raise ValueError(f"feature dump expects a 2-D matrix, got shape {features.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(struct.pack("<III", _DUMP_VERSION, features.shape[0], features.shape[1]))
        fh.write(features.tobytes())


def read_feature_dump(path: str | Path) -> np.ndarray:
    """Read a feature dump written by write_feature_dump, validating the header."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _DUMP_MAGIC:
            raise FeatureDumpError(f"{path}: bad magic {magic!r}")
        header = fh.read(12)
        if len(header) != 12:
            raise FeatureDumpError(f"{path}: truncated header")
        version, rows, cols = struct.unpack("<III", header)
        if version != _DUMP_VERSION:
            raise FeatureDumpError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = rows * cols * 4
    if len(payload) != expected:
        raise FeatureDumpError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()
