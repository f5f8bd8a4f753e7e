"""Command-line interface: synth, prep, train, eval, experiment, report.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or configuration
error (argparse uses 2 on its own for malformed invocations).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import cohort as cohort_mod
from . import plots
from .audio import VadConfig, load_waveform, normalize_volume, prune_quiet_intervals
from .audio import detect_voice_activity, segment_partials
from .checkpoint import load_checkpoint
from .features import extract_logmel, mel_filterbank, write_feature_dump
from .lstm import NetworkShape
from .stats import log_regression
from .train import BatchSpec, TrainConfig, train
from .verify import evaluate, write_eer_report, write_score_dump

log = logging.getLogger("asvkit")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    """Configuration problem that should exit with code 2."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asvkit",
        description="Speaker verification toolkit: synthesis, features, training, "
        "evaluation, and cohort experiments.",
    )
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel repetition workers")
    parser.add_argument("--verbose", action="store_true", help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic speaker cohort")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--speakers", type=int, default=8, help="number of speakers")
    p_synth.add_argument("--utterances", type=int, default=8, help="utterances per speaker")
    p_synth.add_argument("--jitter", type=float, default=0.02, help="per-utterance drift scale")
    p_synth.add_argument("--noise", type=float, default=1e-3, help="additive noise level")

    p_prep = sub.add_parser("prep", help="extract log-mel feature dumps from a manifest")
    p_prep.add_argument("--manifest", required=True, help="JSONL cohort manifest")
    p_prep.add_argument("--out", required=True, help="output directory for feature dumps")
    p_prep.add_argument("--min-utterances", type=int, default=cohort_mod.MIN_UTTERANCES,
                        help="ingestion minimum utterances per speaker")

    p_train = sub.add_parser("train", help="train the embedding network")
    p_train.add_argument("--manifest", required=True, help="JSONL cohort manifest")
    p_train.add_argument("--steps", type=int, default=1000, help="training steps")
    p_train.add_argument("--lr", type=float, default=5e-5, help="Adam learning rate")
    p_train.add_argument("--batch-speakers", type=int, default=16, help="speakers per batch")
    p_train.add_argument("--batch-utterances", type=int, default=4,
                         help="utterances per speaker per batch")
    p_train.add_argument("--checkpoint-dir", required=True, help="checkpoint output directory")
    p_train.add_argument("--loss-csv", default=None, help="loss trace CSV path")
    p_train.add_argument("--hidden", type=int, default=768, help="LSTM hidden size")
    p_train.add_argument("--layers", type=int, default=3, help="LSTM layer count")
    p_train.add_argument("--embedding", type=int, default=256, help="embedding dimension")
    p_train.add_argument("--min-utterances", type=int, default=cohort_mod.MIN_UTTERANCES,
                         help="ingestion minimum utterances per speaker")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a test cohort")
    p_eval.add_argument("--checkpoint", required=True, help="checkpoint file")
    p_eval.add_argument("--manifest", required=True, help="JSONL cohort manifest")
    p_eval.add_argument("--speakers", type=int, default=None,
                        help="evaluate a seeded sample of this many speakers (default: all)")
    p_eval.add_argument("--m", type=int, default=2, help="utterances per test speaker")
    p_eval.add_argument("--scores-csv", default=None, help="per-trial score dump path")
    p_eval.add_argument("--report-csv", default=None, help="EER report CSV path")
    p_eval.add_argument("--min-utterances", type=int, default=2,
                        help="ingestion minimum utterances per speaker")

    p_exp = sub.add_parser("experiment", help="run a repetition-protocol experiment")
    p_exp.add_argument("--spec", required=True, help="experiment spec (JSON or TOML)")
    p_exp.add_argument("--manifest", required=True, help="JSONL cohort manifest")
    p_exp.add_argument("--out", required=True, help="output directory for reports")
    p_exp.add_argument("--reps", type=int, default=None, help="override repetition count")
    p_exp.add_argument("--baseline", default=None,
                       help="baseline report JSON to compare against with a t-test")
    p_exp.add_argument("--min-utterances", type=int, default=2,
                       help="ingestion minimum utterances per speaker")

    p_rep = sub.add_parser("report", help="merge experiment reports, plot, and fit")
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.add_argument("reports", nargs="+", help="experiment report JSON files")
    return parser


def cmd_synth(args) -> int:
    config = cohort_mod.SynthesisConfig(
        n_speakers=args.speakers,
        utterances_per_speaker=args.utterances,
        seed=args.seed,
        jitter=args.jitter,
        noise_level=args.noise,
    )
    manifest = cohort_mod.synthesize_cohort(config, args.out)
    total = sum(len(s.utterances) for s in manifest.speakers)
    print(f"wrote {len(manifest.speakers)} speakers, {total} utterances to {args.out}")
    return EXIT_OK


def cmd_prep(args) -> int:
    manifest = cohort_mod.load_manifest(args.manifest, min_utterances=args.min_utterances)
    if not manifest.speakers:
        raise UsageError(f"manifest {args.manifest} has no usable speakers")
    out_dir = Path(args.out)
    bank = mel_filterbank()
    vad = VadConfig()
    n_files = 0
    for record in manifest.speakers:
        for rel in record.utterances:
            waveform = normalize_volume(load_waveform(manifest.resolve(rel)))
            intervals = prune_quiet_intervals(
                detect_voice_activity(waveform, vad), waveform, vad.prune_threshold_db
            )
            for index, partial in enumerate(segment_partials(waveform, intervals, rel)):
                stem = Path(rel).stem
                dump = out_dir / record.speaker_id / f"{stem}_p{index:02d}.lmel"
                write_feature_dump(dump, extract_logmel(partial, waveform.sample_rate, bank))
                n_files += 1
    print(f"wrote {n_files} feature dumps to {out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    manifest = cohort_mod.load_manifest(args.manifest, min_utterances=args.min_utterances)
    pool, _ = cohort_mod.build_feature_pool(manifest.speakers, manifest)
    spec = BatchSpec(n_speakers=args.batch_speakers, m_utterances=args.batch_utterances)
    config = TrainConfig(steps=args.steps, learning_rate=args.lr, seed=args.seed)
    shape = NetworkShape(
        hidden_size=args.hidden, num_layers=args.layers, embedding_dim=args.embedding
    )
    result = train(
        pool, config, spec, shape,
        checkpoint_dir=args.checkpoint_dir, trace_path=args.loss_csv,
    )
    final_loss = result.trace[-1].loss if result.trace else float("nan")
    print(f"trained {args.steps} steps; final loss {final_loss:.6g}; "
          f"checkpoints in {args.checkpoint_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    params, _ = load_checkpoint(args.checkpoint)
    manifest = cohort_mod.load_manifest(args.manifest, min_utterances=args.min_utterances)
    speakers = sorted(manifest.speakers, key=lambda s: s.speaker_id)
    if args.speakers is not None:
        if args.speakers < 2:
            raise UsageError("--speakers must be at least 2")
        if args.speakers < len(speakers):
            rng = np.random.default_rng([args.seed, 3])
            picks = sorted(rng.choice(len(speakers), args.speakers, replace=False))
            speakers = [speakers[k] for k in picks]
    test_map = {
        s.speaker_id: [(rel, manifest.resolve(rel)) for rel in s.utterances] for s in speakers
    }
    result = evaluate(params, test_map, m_utterances=args.m, seed=args.seed)
    if args.scores_csv:
        write_score_dump(args.scores_csv, result.scores)
    if args.report_csv:
        write_eer_report(args.report_csv, result.eer)
    print(f"EER {result.eer.eer_percent:.2f} % over {result.eer.n_genuine} genuine / "
          f"{result.eer.n_impostor} impostor trials")
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise UsageError(f"experiment spec not found: {spec_path}")
    try:
        spec = cohort_mod.ExperimentSpec.from_file(spec_path)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid experiment spec: {exc}") from exc
    if args.reps is not None:
        spec.repetitions = args.reps
    baseline = None
    if args.baseline is not None:
        baseline_path = Path(args.baseline)
        if not baseline_path.is_file():
            raise UsageError(f"baseline report not found: {baseline_path}")
        baseline = cohort_mod.read_report_json(baseline_path)
    manifest = cohort_mod.load_manifest(args.manifest, min_utterances=args.min_utterances)
    report = cohort_mod.run_experiment(spec, manifest, out_dir=args.out, jobs=args.jobs)
    if report.eer_std is None:
        print(f"{report.name}: EER {report.eer_mean:.2f} % over 1 repetition")
    else:
        print(f"{report.name}: EER {report.eer_mean:.2f} ± {report.eer_std:.2f} % "
              f"over {len(report.repetitions)} repetitions")
    if baseline is not None:
        result = cohort_mod.compare_reports(report, baseline)
        verdict = "significant" if result.significant else "not significant"
        print(f"vs baseline {baseline.name}: t={result.statistic:.4f} "
              f"p={result.p_value:.4g} ({verdict} at 0.05)")
    return EXIT_OK


def cmd_report(args) -> int:
    out_dir = Path(args.out)
    reports = []
    for item in args.reports:
        path = Path(item)
        try:
            reports.append(cohort_mod.read_report_json(path))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise RuntimeError(f"cannot read report {path}: {exc}") from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    merged = out_dir / "merged_reports.csv"
    import csv as _csv

    with open(merged, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["experiment", "repetition", "eer_percent", "n_train", "test_mean_wrr"])
        for report in reports:
            for r in report.repetitions:
                writer.writerow(
                    [report.name, r.repetition, f"{r.eer_percent:.9g}", r.n_train,
                     f"{r.test_mean_wrr:.9g}"]
                )
    plots.write_svg(
        out_dir / "eer_distribution.svg",
        plots.eer_distribution_svg({rep.name: rep.eers for rep in reports}),
    )
    sizes = [float(np.mean([r.n_train for r in rep.repetitions])) for rep in reports]
    means = [rep.eer_mean for rep in reports]
    fit = None
    if len(set(sizes)) >= 2:
        fit = log_regression(sizes, means)
        print(f"log fit: a={fit.intercept:.4f} b={fit.slope:.4f} r2={fit.r_squared:.2f}")
    plots.write_svg(out_dir / "size_vs_eer.svg",
                    plots.size_vs_eer_svg(list(zip(sizes, means)), fit))
    print(f"merged {len(reports)} reports into {merged}")
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth,
    "prep": cmd_prep,
    "train": cmd_train,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
