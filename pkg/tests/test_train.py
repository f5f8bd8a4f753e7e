"""Batch sampling, the Adam update, and the training loop."""

import csv

import numpy as np
import pytest

from asvkit.ge2e import MIN_SCALE, GE2EScalars
from asvkit.lstm import DivergenceError, GradientSet, NetworkShape, init_params
from asvkit.train import (
    AdamState,
    BatchSpec,
    TrainConfig,
    TraceRow,
    adam_step,
    eligible_speakers,
    init_adam_state,
    sample_batch,
    train,
    write_loss_trace,
)

SHAPE = NetworkShape(input_dim=8, hidden_size=6, num_layers=2, embedding_dim=4)


def make_pool(rng, sizes, frames=200, dim=8):
    """sizes: mapping speaker id -> number of partials."""
    return {
        sid: [rng.normal(size=(frames, dim)).astype(np.float32) for _ in range(k)]
        for sid, k in sizes.items()
    }


class TestBatchSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            BatchSpec(n_speakers=1)
        with pytest.raises(ValueError):
            BatchSpec(m_utterances=1)
        with pytest.raises(ValueError):
            BatchSpec(min_frames=200, max_frames=100)


class TestSampling:
    def test_eligibility_requires_long_partial(self, rng):
        pool = make_pool(rng, {"a": 2, "b": 2})
        pool["c"] = [rng.normal(size=(100, 8)).astype(np.float32)]  # too short
        spec = BatchSpec(n_speakers=2, m_utterances=2, min_frames=140, max_frames=180)
        assert eligible_speakers(pool, spec) == ["a", "b"]

    def test_batch_shape_and_length_range(self, rng):
        pool = make_pool(rng, {"a": 4, "b": 4, "c": 4})
        spec = BatchSpec(n_speakers=3, m_utterances=4, min_frames=140, max_frames=180)
        batch = sample_batch(pool, spec, np.random.default_rng(0))
        n, m, length, dim = batch.features.shape
        assert (n, m, dim) == (3, 4, 8)
        assert 140 <= length <= 180
        assert batch.frame_length == length
        assert sorted(batch.speaker_ids) == ["a", "b", "c"]

    def test_shared_length_across_batch(self, rng):
        pool = make_pool(rng, {"a": 3, "b": 3})
        spec = BatchSpec(n_speakers=2, m_utterances=2, min_frames=140, max_frames=180)
        lengths = {
            sample_batch(pool, spec, np.random.default_rng(k)).features.shape[2]
            for k in range(8)
        }
        assert len(lengths) > 1  # length is re-drawn per batch

    def test_replacement_only_when_short(self, rng):
        # speaker with exactly M partials: all M used once
        pool = make_pool(rng, {"a": 4, "b": 2})
        spec = BatchSpec(n_speakers=2, m_utterances=4, min_frames=10, max_frames=20)
        batch = sample_batch(pool, spec, np.random.default_rng(3))
        a_row = batch.speaker_ids.index("a")
        crops = batch.features[a_row]
        # 4 distinct partials for "a": sums of distinct gaussians differ
        sums = {float(c.sum()) for c in crops}
        assert len(sums) == 4

    def test_insufficient_speakers(self, rng):
        pool = make_pool(rng, {"a": 2})
        spec = BatchSpec(n_speakers=2, m_utterances=2)
        with pytest.raises(ValueError, match="eligible"):
            sample_batch(pool, spec, np.random.default_rng(0))

    def test_deterministic_given_rng_seed(self, rng):
        pool = make_pool(rng, {"a": 3, "b": 3, "c": 3})
        spec = BatchSpec(n_speakers=2, m_utterances=2)
        b1 = sample_batch(pool, spec, np.random.default_rng(9))
        b2 = sample_batch(pool, spec, np.random.default_rng(9))
        assert np.array_equal(b1.features, b2.features)
        assert b1.speaker_ids == b2.speaker_ids


class TestAdam:
    def grads_like(self, params, fill):
        tensors = {name: np.full_like(t, fill) for name, t in params.named_tensors()}
        return GradientSet(tensors=tensors, d_scale=fill, d_bias=fill)

    def test_first_step_is_signed_lr(self):
        # with m_hat = g and v_hat = g^2 the first update is lr * sign(g)
        params = init_params(0, SHAPE, dtype=np.float64)
        before = {n: t.copy() for n, t in params.named_tensors()}
        scalars = GE2EScalars()
        config = TrainConfig(steps=1, learning_rate=5e-5)
        grads = self.grads_like(params, 0.25)
        adam_step(params, scalars, grads, init_adam_state(params), config)
        for name, tensor in params.named_tensors():
            delta = tensor - before[name]
            assert np.allclose(delta, -5e-5, atol=1e-9), name
        assert scalars.scale == pytest.approx(10.0 - 5e-5, abs=1e-9)
        assert scalars.bias == pytest.approx(-5.0 - 5e-5, abs=1e-9)

    def test_scale_clamped(self):
        params = init_params(0, SHAPE, dtype=np.float64)
        scalars = GE2EScalars(scale=MIN_SCALE)
        config = TrainConfig(steps=1, learning_rate=0.5)
        grads = self.grads_like(params, 1.0)
        adam_step(params, scalars, grads, init_adam_state(params), config)
        assert scalars.scale == MIN_SCALE

    def test_rejects_nonfinite(self):
        params = init_params(0, SHAPE, dtype=np.float64)
        grads = self.grads_like(params, 1.0)
        grads.tensors["proj.w"][0, 0] = np.nan
        with pytest.raises(DivergenceError):
            adam_step(params, GE2EScalars(), grads, init_adam_state(params), TrainConfig())

    def test_state_counts_steps(self):
        params = init_params(0, SHAPE, dtype=np.float64)
        state = init_adam_state(params)
        grads = self.grads_like(params, 0.1)
        scalars = GE2EScalars()
        config = TrainConfig(learning_rate=1e-5)
        for expect in (1, 2, 3):
            adam_step(params, scalars, grads, state, config)
            assert state.step == expect


class TestTrace:
    def test_csv_layout(self, tmp_path):
        rows = [
            TraceRow(step=1, loss=0.123456789123, grad_norm_preclip=2.5, frame_length=150, learning_rate=5e-5),
            TraceRow(step=2, loss=0.1, grad_norm_preclip=3.0, frame_length=160, learning_rate=5e-5),
        ]
        path = tmp_path / "trace.csv"
        write_loss_trace(path, rows)
        with open(path, newline="") as fh:
            got = list(csv.reader(fh))
        assert got[0] == ["step", "loss", "grad_norm_preclip", "frame_length", "learning_rate"]
        assert got[1][0] == "1"
        assert float(got[1][1]) == pytest.approx(0.123456789123, abs=1e-9)
        assert len(got) == 3


class TestTrainLoop:
    def small_pool(self, rng, n_speakers=4):
        sizes = {f"spk{i}": 3 for i in range(n_speakers)}
        return make_pool(rng, sizes, frames=60, dim=8)

    def spec(self):
        return BatchSpec(n_speakers=3, m_utterances=2, min_frames=40, max_frames=50)

    def test_runs_and_reports(self, rng, tmp_path):
        pool = self.small_pool(rng)
        config = TrainConfig(steps=12, learning_rate=1e-4, seed=7, checkpoint_interval=5)
        result = train(pool, config, self.spec(), SHAPE,
                       checkpoint_dir=tmp_path, trace_path=tmp_path / "trace.csv")
        assert len(result.trace) == 12
        assert result.init_digest != result.final_digest
        assert (tmp_path / "final.ckpt").exists()
        assert (tmp_path / "step000005.ckpt").exists()
        assert (tmp_path / "trace.csv").exists()
        assert all(np.isfinite(r.loss) for r in result.trace)
        assert all(r.grad_norm_preclip >= 0 for r in result.trace)

    def test_deterministic(self, rng):
        pool = self.small_pool(rng)
        config = TrainConfig(steps=8, learning_rate=1e-4, seed=3)
        a = train(pool, config, self.spec(), SHAPE)
        b = train(pool, config, self.spec(), SHAPE)
        assert a.init_digest == b.init_digest
        assert a.final_digest == b.final_digest
        assert [r.loss for r in a.trace] == [r.loss for r in b.trace]

    def test_seed_changes_run(self, rng):
        pool = self.small_pool(rng)
        a = train(pool, TrainConfig(steps=5, learning_rate=1e-4, seed=1), self.spec(), SHAPE)
        b = train(pool, TrainConfig(steps=5, learning_rate=1e-4, seed=2), self.spec(), SHAPE)
        assert a.final_digest != b.final_digest

    def test_refuses_single_speaker_pool(self, rng):
        pool = make_pool(rng, {"only": 5}, frames=60)
        with pytest.raises(ValueError, match="at least 2"):
            train(pool, TrainConfig(steps=1), self.spec(), SHAPE)

    def test_zero_steps_returns_init(self, rng):
        pool = self.small_pool(rng)
        result = train(pool, TrainConfig(steps=0, learning_rate=1e-4, seed=5), self.spec(), SHAPE)
        assert result.trace == []
        assert result.init_digest == result.final_digest
