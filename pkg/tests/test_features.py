"""Mel scale, filterbank construction, framing, log-mel extraction, dumps."""

import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asvkit.features import (
    LOG_FLOOR,
    N_FFT,
    N_MELS,
    FeatureDumpError,
    extract_logmel,
    filter_center_frequencies,
    frame_signal,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    read_feature_dump,
    write_feature_dump,
)

SR = 16_000


class TestMelScale:
    def test_known_points(self):
        assert hz_to_mel(0.0) == 0.0
        assert hz_to_mel(1000.0) == pytest.approx(2595.0 * np.log10(1 + 1000.0 / 700.0))

    @given(st.floats(0, 8000))
    def test_round_trip(self, hz):
        assert mel_to_hz(hz_to_mel(hz)) == pytest.approx(hz, abs=1e-6)

    @given(st.floats(0, 7999), st.floats(0.001, 1))
    def test_monotone(self, hz, step):
        assert hz_to_mel(hz + step) > hz_to_mel(hz)


class TestFilterbank:
    def test_shape_and_range(self):
        bank = mel_filterbank()
        assert bank.shape == (N_MELS, N_FFT // 2 + 1)
        assert np.all(bank >= 0.0)
        assert np.all(bank <= 1.0 + 1e-12)

    def test_every_filter_nonempty(self):
        bank = mel_filterbank()
        assert np.all(bank.max(axis=1) > 0.0)

    def test_centers_monotone_in_hz(self):
        centers = filter_center_frequencies()
        assert centers.shape == (N_MELS,)
        assert np.all(np.diff(centers) > 0)
        assert centers[0] > 0.0
        assert centers[-1] < 8000.0

    def test_triangles_peak_near_center(self):
        bank = mel_filterbank()
        centers = filter_center_frequencies()
        freqs = np.fft.rfftfreq(N_FFT, d=1.0 / SR)
        bin_width = freqs[1] - freqs[0]
        for row, center in zip(bank, centers):
            peak_freq = freqs[int(np.argmax(row))]
            assert abs(peak_freq - center) <= bin_width


class TestFraming:
    def test_matches_naive_loop(self, rng):
        sig = rng.normal(size=2000)
        frames = frame_signal(sig, 400, 160)
        expect = np.stack([sig[i : i + 400] for i in range(0, 2000 - 400 + 1, 160)])
        assert np.array_equal(frames, expect)

    def test_too_short_gives_empty(self):
        frames = frame_signal(np.zeros(399), 400, 160)
        assert frames.shape[0] == 0


class TestLogMel:
    def test_shape_and_dtype(self, rng):
        sig = rng.normal(size=SR).astype(np.float64) * 0.1
        feats = extract_logmel(sig)
        assert feats.dtype == np.float32
        assert feats.shape == ((SR - 400) // 160 + 1, N_MELS)

    def test_silence_hits_log_floor(self):
        feats = extract_logmel(np.zeros(1600))
        assert np.allclose(feats, np.log(LOG_FLOOR))

    def test_gain_shifts_logmel_additively(self, rng):
        sig = rng.normal(size=4800) * 0.2
        a = extract_logmel(sig).astype(np.float64)
        b = extract_logmel(4.0 * sig).astype(np.float64)
        active = a > np.log(LOG_FLOOR) + 1e-3
        # power scales by 16, log-power shifts by ln 16
        assert np.allclose(b[active] - a[active], np.log(16.0), atol=1e-3)

    def test_tone_energy_lands_in_matching_filter(self):
        t = np.arange(SR) / SR
        sig = 0.5 * np.sin(2 * np.pi * 1000.0 * t)
        feats = extract_logmel(sig)
        centers = filter_center_frequencies()
        hot = int(np.argmax(feats.mean(axis=0)))
        assert abs(centers[hot] - 1000.0) < 150.0


class TestFeatureDump:
    def test_round_trip(self, tmp_path, rng):
        feats = rng.normal(size=(23, N_MELS)).astype(np.float32)
        path = tmp_path / "f.bin"
        write_feature_dump(path, feats)
        assert np.array_equal(read_feature_dump(path), feats)

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "f.bin"
        write_feature_dump(path, np.zeros((2, N_MELS), dtype=np.float32))
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(FeatureDumpError, match="magic"):
            read_feature_dump(path)

    def test_rejects_truncation(self, tmp_path):
        path = tmp_path / "f.bin"
        write_feature_dump(path, np.zeros((4, N_MELS), dtype=np.float32))
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 7])
        with pytest.raises(FeatureDumpError):
            read_feature_dump(path)

    def test_rejects_unknown_version(self, tmp_path):
        path = tmp_path / "f.bin"
        write_feature_dump(path, np.zeros((2, N_MELS), dtype=np.float32))
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(raw))
        with pytest.raises(FeatureDumpError, match="version"):
            read_feature_dump(path)

    def test_rejects_trailing_garbage(self, tmp_path):
        path = tmp_path / "f.bin"
        write_feature_dump(path, np.zeros((2, N_MELS), dtype=np.float32))
        path.write_bytes(path.read_bytes() + b"\x00\x00")
        with pytest.raises(FeatureDumpError):
            read_feature_dump(path)
