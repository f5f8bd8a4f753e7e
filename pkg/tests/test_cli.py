"""Command-line interface: every subcommand plus exit-code conventions."""

import json
from pathlib import Path

import numpy as np
import pytest

from asvkit.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from asvkit.cohort import (
    ExperimentReport,
    RepetitionResult,
    write_report_json,
)


@pytest.fixture(scope="module")
def cohort_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("clicohort")
    code = main([
        "--seed", "13", "synth", "--out", str(out),
        "--speakers", "6", "--utterances", "4",
        "--jitter", "0.05", "--noise", "0.002",
    ])
    assert code == EXIT_OK
    return out


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, cohort_dir):
    ckpt = tmp_path_factory.mktemp("ckpt")
    code = main([
        "--seed", "13", "train",
        "--manifest", str(cohort_dir / "manifest.jsonl"),
        "--min-utterances", "4",
        "--steps", "3", "--lr", "1e-4",
        "--batch-speakers", "4", "--batch-utterances", "2",
        "--hidden", "8", "--layers", "1", "--embedding", "4",
        "--checkpoint-dir", str(ckpt),
        "--loss-csv", str(ckpt / "trace.csv"),
    ])
    assert code == EXIT_OK
    return ckpt


class TestSynth:
    def test_outputs(self, cohort_dir, capsys):
        assert (cohort_dir / "manifest.jsonl").is_file()
        wavs = list((cohort_dir / "wav").glob("*.wav"))
        assert len(wavs) == 6 * 4

    def test_deterministic_across_dirs(self, tmp_path, cohort_dir):
        again = tmp_path / "again"
        code = main([
            "--seed", "13", "synth", "--out", str(again),
            "--speakers", "6", "--utterances", "4",
            "--jitter", "0.05", "--noise", "0.002",
        ])
        assert code == EXIT_OK
        for wav in sorted((cohort_dir / "wav").glob("*.wav")):
            twin = again / "wav" / wav.name
            assert twin.read_bytes() == wav.read_bytes()


class TestPrep:
    def test_writes_feature_dumps(self, cohort_dir, tmp_path, capsys):
        out = tmp_path / "feats"
        code = main([
            "prep", "--manifest", str(cohort_dir / "manifest.jsonl"),
            "--min-utterances", "4", "--out", str(out),
        ])
        assert code == EXIT_OK
        dumps = list(out.rglob("*.lmel"))
        assert len(dumps) >= 6 * 4  # at least one partial per utterance
        assert "feature dumps" in capsys.readouterr().out

    def test_missing_manifest_is_runtime_error(self, tmp_path):
        code = main([
            "prep", "--manifest", str(tmp_path / "none.jsonl"), "--out", str(tmp_path),
        ])
        assert code == EXIT_RUNTIME


class TestTrain:
    def test_artifacts(self, trained_dir, capsys):
        assert (trained_dir / "final.ckpt").is_file()
        trace = (trained_dir / "trace.csv").read_text().splitlines()
        assert trace[0] == "step,loss,grad_norm_preclip,frame_length,learning_rate"
        assert len(trace) == 1 + 3


class TestEval:
    def test_reports_eer(self, cohort_dir, trained_dir, tmp_path, capsys):
        scores = tmp_path / "scores.csv"
        report = tmp_path / "eer.csv"
        code = main([
            "--seed", "13", "eval",
            "--checkpoint", str(trained_dir / "final.ckpt"),
            "--manifest", str(cohort_dir / "manifest.jsonl"),
            "--min-utterances", "4", "--m", "2",
            "--scores-csv", str(scores), "--report-csv", str(report),
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "EER" in out and "impostor" in out
        assert scores.is_file() and report.is_file()

    def test_speaker_subset_guard(self, cohort_dir, trained_dir):
        code = main([
            "eval", "--checkpoint", str(trained_dir / "final.ckpt"),
            "--manifest", str(cohort_dir / "manifest.jsonl"),
            "--min-utterances", "4", "--speakers", "1",
        ])
        assert code == EXIT_USAGE

    def test_missing_checkpoint(self, cohort_dir, tmp_path):
        code = main([
            "eval", "--checkpoint", str(tmp_path / "none.ckpt"),
            "--manifest", str(cohort_dir / "manifest.jsonl"),
            "--min-utterances", "4",
        ])
        assert code == EXIT_RUNTIME


class TestExperiment:
    def spec_file(self, path, **overrides):
        payload = dict(
            name="clidemo", speaker_count=6, repetitions=1, train_fraction=0.7,
            eval_m=2, master_seed=77, steps=2, learning_rate=1e-4,
            batch_speakers=4, batch_utterances=2, hidden_size=8, num_layers=1,
            embedding_dim=4,
        )
        payload.update(overrides)
        path.write_text(json.dumps(payload))
        return path

    def test_runs_and_writes_reports(self, cohort_dir, tmp_path, capsys):
        spec = self.spec_file(tmp_path / "e.json")
        out = tmp_path / "results"
        code = main([
            "experiment", "--spec", str(spec),
            "--manifest", str(cohort_dir / "manifest.jsonl"),
            "--min-utterances", "4", "--out", str(out),
        ])
        assert code == EXIT_OK
        assert (out / "clidemo_report.json").is_file()
        assert (out / "clidemo_repetitions.csv").is_file()
        assert "EER" in capsys.readouterr().out

    def test_missing_spec_is_usage_error(self, cohort_dir, tmp_path):
        code = main([
            "experiment", "--spec", str(tmp_path / "none.json"),
            "--manifest", str(cohort_dir / "manifest.jsonl"), "--out", str(tmp_path),
        ])
        assert code == EXIT_USAGE

    def test_invalid_spec_key_is_usage_error(self, cohort_dir, tmp_path):
        spec = self.spec_file(tmp_path / "bad.json", bogus_key=1)
        code = main([
            "experiment", "--spec", str(spec),
            "--manifest", str(cohort_dir / "manifest.jsonl"), "--out", str(tmp_path),
        ])
        assert code == EXIT_USAGE


def fake_report(name, n_train, eers, seed0=0):
    reps = [
        RepetitionResult(
            repetition=i, seed=seed0 + i, eer_percent=e, n_train=n_train, n_test=4,
            train_hours=1.0, test_hours=0.3, train_mean_age=10.0, test_mean_age=10.0,
            test_mean_wrr=60.0, wrr_eer_r=None, train_speakers=[], test_speakers=[],
            init_digest="a" * 64, final_digest="b" * 64,
        )
        for i, e in enumerate(eers)
    ]
    return ExperimentReport(
        name=name, spec={}, repetitions=reps,
        eer_mean=float(np.mean(eers)),
        eer_std=float(np.std(eers, ddof=1)) if len(eers) > 1 else None,
        shapiro_w=None, shapiro_p=None, wrr_r_across=None,
        wrr_r_per_rep_mean=None, wrr_r_per_rep_std=None,
    )


class TestReport:
    def test_merging_and_fit(self, tmp_path, capsys):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        c = tmp_path / "c.json"
        write_report_json(a, fake_report("small", 16, [30.0, 28.0, 26.0]))
        write_report_json(b, fake_report("medium", 32, [22.0, 20.0, 24.0]))
        write_report_json(c, fake_report("large", 64, [15.0, 17.0, 13.0]))
        out = tmp_path / "merged"
        code = main(["report", "--out", str(out), str(a), str(b), str(c)])
        assert code == EXIT_OK
        printed = capsys.readouterr().out
        assert "log fit:" in printed
        assert "b=-" in printed  # error falls as training size grows
        merged = (out / "merged_reports.csv").read_text().splitlines()
        assert merged[0] == "experiment,repetition,eer_percent,n_train,test_mean_wrr"
        assert len(merged) == 1 + 9
        assert (out / "eer_distribution.svg").is_file()
        assert (out / "size_vs_eer.svg").is_file()

    def test_unreadable_report(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        code = main(["report", "--out", str(tmp_path), str(bad)])
        assert code == EXIT_RUNTIME


class TestParsing:
    def test_no_command_is_usage_error(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    @pytest.mark.parametrize(
        "argv",
        [
            ["--help"],
            ["synth", "--help"],
            ["prep", "--help"],
            ["train", "--help"],
            ["eval", "--help"],
            ["experiment", "--help"],
            ["report", "--help"],
        ],
    )
    def test_help_exits_zero(self, argv, capsys):
        assert main(argv) == EXIT_OK
        assert "usage" in capsys.readouterr().out.lower()
