#!/usr/bin/env python3
"""Training-set-size sweep against one fixed held-out test set.

Nested training subsets are drawn from a single synthetic cohort while the
test speakers stay fixed, so EER differences come from the training side
alone. Fits EER = a + b*ln(size) over the per-size means and prints the
slope. Roughly a minute per (size, repetition) at the defaults.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from asvkit.cohort import SynthesisConfig, build_feature_pool, synthesize_cohort
from asvkit.lstm import NetworkShape
from asvkit.stats import log_regression
from asvkit.train import BatchSpec, TrainConfig, train
from asvkit.verify import evaluate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("size_trend_run"))
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--speakers", type=int, default=72, help="cohort size; must cover max(sizes) + test")
    ap.add_argument("--test-speakers", type=int, default=8)
    args = ap.parse_args()

    synth = SynthesisConfig(
        n_speakers=args.speakers, utterances_per_speaker=6,
        seed=500, jitter=0.12, noise_level=0.004,
    )
    print(f"synthesizing {args.speakers} speakers ...")
    manifest = synthesize_cohort(synth, args.out / "cohort")
    pool, _ = build_feature_pool(manifest.speakers, manifest)

    ids = sorted(pool)
    perm = np.random.default_rng([600, 0]).permutation(len(ids))
    test_ids = [ids[k] for k in perm[: args.test_speakers]]
    train_ids = [ids[k] for k in perm[args.test_speakers :]]
    if max(args.sizes) > len(train_ids):
        raise SystemExit(f"largest size {max(args.sizes)} exceeds {len(train_ids)} training speakers")
    by_id = {r.speaker_id: r for r in manifest.speakers}
    test_map = {
        sid: [(rel, manifest.resolve(rel)) for rel in by_id[sid].utterances]
        for sid in test_ids
    }

    shape = NetworkShape(input_dim=40, hidden_size=64, num_layers=2, embedding_dim=32)
    args.out.mkdir(parents=True, exist_ok=True)
    means = []
    with open(args.out / "size_trend.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["train_size", "repetition", "eer_percent"])
        for size in args.sizes:
            spec = BatchSpec(n_speakers=min(8, size), m_utterances=4)
            per_size = []
            for rep in range(args.reps):
                pick = np.random.default_rng([700 + rep, size]).choice(
                    len(train_ids), size=size, replace=False
                )
                sub_pool = {train_ids[k]: pool[train_ids[k]] for k in pick}
                config = TrainConfig(steps=args.steps, learning_rate=1e-3, seed=600 + rep)
                result = train(sub_pool, config, spec, shape)
                ev = evaluate(result.params, test_map, m_utterances=4, seed=600 + rep)
                per_size.append(ev.eer.eer_percent)
                writer.writerow([size, rep, f"{ev.eer.eer_percent:.12g}"])
                print(f"size {size:3d} rep {rep}: EER {ev.eer.eer_percent:.2f}%")
            means.append(float(np.mean(per_size)))

    for size, mean in zip(args.sizes, means):
        print(f"size {size:3d}: mean EER {mean:.2f}%")
    if len(args.sizes) >= 2:
        fit = log_regression([float(s) for s in args.sizes], means)
        print(f"log fit: a={fit.intercept:.4f} b={fit.slope:+.4f} r2={fit.r_squared:.3f}")
    print(f"table in {args.out / 'size_trend.csv'}")


if __name__ == "__main__":
    main()
