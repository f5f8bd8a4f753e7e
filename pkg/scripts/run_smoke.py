#!/usr/bin/env python3
"""End-to-end smoke run: synthesize a small cohort, train, evaluate.

Prints the untrained-baseline EER and the trained EER on the same held-out
speakers, plus the loss trajectory endpoints. Finishes in a couple of
minutes on a laptop CPU at the default 500 steps.
"""

import argparse
from pathlib import Path

import numpy as np

from asvkit.cohort import SynthesisConfig, build_feature_pool, split_train_test, synthesize_cohort
from asvkit.lstm import NetworkShape, init_params
from asvkit.train import BatchSpec, TrainConfig, train
from asvkit.verify import evaluate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("smoke_run"))
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=101)
    ap.add_argument("--lr", type=float, default=2e-3)
    args = ap.parse_args()

    synth = SynthesisConfig(
        n_speakers=8, utterances_per_speaker=6, seed=7, jitter=0.12, noise_level=0.004
    )
    print(f"synthesizing {synth.n_speakers} speakers into {args.out / 'cohort'} ...")
    manifest = synthesize_cohort(synth, args.out / "cohort")

    train_speakers, test_speakers = split_train_test(
        manifest.speakers, 0.5, np.random.default_rng([args.seed, 0])
    )
    pool, _ = build_feature_pool(train_speakers, manifest)
    shape = NetworkShape(input_dim=40, hidden_size=64, num_layers=2, embedding_dim=32)

    config = TrainConfig(steps=args.steps, learning_rate=args.lr, seed=args.seed)
    result = train(
        pool, config, BatchSpec(n_speakers=4, m_utterances=4), shape,
        checkpoint_dir=args.out / "checkpoints", trace_path=args.out / "trace.csv",
    )

    test_map = {
        s.speaker_id: [(rel, manifest.resolve(rel)) for rel in s.utterances]
        for s in test_speakers
    }
    untrained = evaluate(init_params(config.seed, shape), test_map, m_utterances=4, seed=args.seed)
    trained = evaluate(result.params, test_map, m_utterances=4, seed=args.seed)

    losses = [row.loss for row in result.trace]
    window = min(100, max(1, len(losses) // 2))
    print(f"loss: first-{window} mean {np.mean(losses[:window]):.4f}, "
          f"last-{window} mean {np.mean(losses[-window:]):.4f}")
    print(f"untrained EER {untrained.eer.eer_percent:.2f}%  ->  "
          f"trained EER {trained.eer.eer_percent:.2f}%")
    print(f"artifacts in {args.out}")


if __name__ == "__main__":
    main()
