"""Cohort manifests, synthetic speaker generation, and the experiment harness."""

from __future__ import annotations

import csv
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio import (
    VadConfig,
    Waveform,
    detect_voice_activity,
    load_waveform,
    normalize_volume,
    prune_quiet_intervals,
    save_waveform,
    segment_partials,
)
from .features import extract_logmel, mel_filterbank
from .lstm import NetworkShape
from .stats import TestResult, pearson, shapiro_wilk, t_test_unpaired
from .train import BatchSpec, TrainConfig, train
from .verify import evaluate

log = logging.getLogger(__name__)

MIN_UTTERANCES = 8


class ManifestError(ValueError):
    """Raised for structurally broken manifests (bad JSON, duplicate ids)."""


class ExperimentError(RuntimeError):
    """Raised when a repetition of an experiment fails."""


@dataclass
class SpeakerRecord:
    speaker_id: str
    group: str
    age: float
    wrr: float
    utterances: list[str]


@dataclass
class CohortManifest:
    speakers: list[SpeakerRecord]
    root: Path | None = None
    provenance: dict = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [s.speaker_id for s in self.speakers]
        duplicates = sorted({sid for sid in ids if ids.count(sid) > 1})
        if duplicates:
            raise ManifestError(f"duplicate speaker ids: {duplicates}")

    def resolve(self, relative: str) -> Path:
        return (self.root / relative) if self.root is not None else Path(relative)


_REQUIRED_FIELDS = ("speaker_id", "group", "age", "wrr", "utterances")


def load_manifest(
    path: str | Path,
    min_utterances: int = MIN_UTTERANCES,
    check_files: bool = True,
) -> CohortManifest:
    """Read a JSONL manifest; records violating the ingestion rules are
    rejected individually with a diagnostic rather than failing the load."""
    path = Path(path)
    root = path.parent
    speakers: list[SpeakerRecord] = []
    diagnostics: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
            missing = [k for k in _REQUIRED_FIELDS if k not in record]
            if missing:
                diagnostics.append(f"line {line_no}: missing fields {missing}")
                continue
            sid = str(record["speaker_id"])
            utterances = record["utterances"]
            if not isinstance(utterances, list) or len(utterances) < min_utterances:
                diagnostics.append(
                    f"speaker {sid!r}: {len(utterances)} utterances, "
                    f"needs >= {min_utterances}"
                )
                continue
            age = float(record["age"])
            if age <= 0:
                diagnostics.append(f"speaker {sid!r}: non-positive age {age}")
                continue
            if check_files:
                unreadable = [u for u in utterances if not (root / u).is_file()]
                if unreadable:
                    diagnostics.append(f"speaker {sid!r}: unreadable paths {unreadable}")
                    continue
            speakers.append(
                SpeakerRecord(sid, str(record["group"]), age, float(record["wrr"]),
                              [str(u) for u in utterances])
            )
    if not speakers:
        warnings.warn(f"manifest {path} yielded no usable speakers", stacklevel=2)
    for item in diagnostics:
        log.warning("manifest %s: rejected %s", path, item)
    return CohortManifest(
        speakers=speakers,
        root=root,
        provenance={"source": str(path)},
        diagnostics=diagnostics,
    )


def save_manifest(manifest: CohortManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for s in manifest.speakers:
            fh.write(json.dumps(asdict(s), sort_keys=True) + "\n")


# --- synthetic cohort ----------------------------------------------------------


@dataclass
class GroupSpec:
    """One cohort subgroup: demographics plus an articulation-variability scale."""

    name: str
    weight: float = 1.0
    age_mean: float = 10.0
    age_std: float = 3.0
    wrr_mean: float = 65.0
    wrr_std: float = 12.0
    variability: float = 1.0


def default_groups() -> list[GroupSpec]:
    return [
        GroupSpec("control", weight=0.5, age_mean=12.2, age_std=3.7,
                  wrr_mean=65.9, wrr_std=12.4, variability=1.0),
        GroupSpec("target", weight=0.5, age_mean=9.3, age_std=2.6,
                  wrr_mean=57.6, wrr_std=13.9, variability=2.0),
    ]


@dataclass
class SynthesisConfig:
    """Knobs for the parametric speaker generator.

    Each speaker is a pitch plus three resonance peaks shaping a harmonic
    series. Per-utterance deviations (resonance drift, duration, level) all
    scale with jitter times the group variability, and additive noise scales
    with noise_level, so jitter = noise = 0 reproduces identical utterances.
    """

    n_speakers: int = 8
    utterances_per_speaker: int = 8
    seed: int = 0
    sample_rate: int = 16_000
    jitter: float = 0.02
    noise_level: float = 1e-3
    segment_seconds: tuple[float, float] = (2.1, 3.0)
    two_segment_fraction: float = 0.5
    groups: list[GroupSpec] = field(default_factory=default_groups)

    def __post_init__(self) -> None:
        if self.n_speakers < 1 or self.utterances_per_speaker < 1:
            raise ValueError("need at least one speaker and one utterance")
        if self.jitter < 0 or self.noise_level < 0:
            raise ValueError("jitter and noise_level must be non-negative")


@dataclass
class _VoiceProfile:
    f0: float
    resonances: np.ndarray
    widths: np.ndarray
    amps: np.ndarray
    phases: np.ndarray
    mod_rate: float
    mod_phase: float
    base_seconds: float
    segments: int
    pause_seconds: float
    lead_seconds: float
    level: float
    variability: float


def _assign_groups(config: SynthesisConfig) -> list[GroupSpec]:
    """Deterministic proportional assignment by largest remainder."""
    weights = np.array([max(g.weight, 0.0) for g in config.groups], dtype=np.float64)
    if weights.sum() <= 0:
        raise ValueError("group weights must sum to a positive value")
    exact = weights / weights.sum() * config.n_speakers
    counts = np.floor(exact).astype(int)
    remainder = exact - counts
    for _ in range(config.n_speakers - int(counts.sum())):
        idx = int(np.argmax(remainder))
        counts[idx] += 1
        remainder[idx] = -1.0
    out: list[GroupSpec] = []
    for g, count in zip(config.groups, counts):
        out.extend([g] * count)
    return out[: config.n_speakers]


def _draw_profile(rng: np.random.Generator, config: SynthesisConfig, group: GroupSpec):
    profile = _VoiceProfile(
        f0=float(rng.uniform(95.0, 240.0)),
        resonances=np.array(
            [rng.uniform(350.0, 850.0), rng.uniform(1000.0, 2200.0), rng.uniform(2400.0, 3400.0)]
        ),
        widths=rng.uniform(70.0, 150.0, size=3),
        amps=rng.uniform(0.6, 1.0, size=3),
        phases=rng.uniform(0.0, 2.0 * np.pi, size=64),
        mod_rate=float(rng.uniform(2.5, 5.0)),
        mod_phase=float(rng.uniform(0.0, 2.0 * np.pi)),
        base_seconds=float(rng.uniform(*config.segment_seconds)),
        segments=1 + int(rng.random() < config.two_segment_fraction),
        pause_seconds=float(rng.uniform(0.25, 0.4)),
        lead_seconds=float(rng.uniform(0.1, 0.2)),
        level=float(rng.uniform(0.55, 0.8)),
        variability=group.variability,
    )
    age = float(np.clip(rng.normal(group.age_mean, group.age_std), 3.0, 90.0))
    wrr = float(np.clip(rng.normal(group.wrr_mean, group.wrr_std), 5.0, 100.0))
    return profile, round(age, 2), round(wrr, 2)


def _voiced_segment(
    rng: np.random.Generator, profile: _VoiceProfile, config: SynthesisConfig
) -> np.ndarray:
    jit = config.jitter * profile.variability
    seconds = profile.base_seconds * (1.0 + 0.5 * jit * rng.normal())
    seconds = max(seconds, 1.9)  # keep partials above the retention minimum
    n = int(round(seconds * config.sample_rate))
    t = np.arange(n) / config.sample_rate
    f0 = profile.f0 * (1.0 + 0.3 * jit * rng.normal())
    resonances = profile.resonances * (1.0 + jit * rng.normal(size=3))
    harmonics = np.arange(1, int(4000.0 / f0) + 1)
    freqs = harmonics * f0
    envelope = np.zeros_like(freqs)
    for peak, width, amp in zip(resonances, profile.widths, profile.amps):
        envelope += amp * np.exp(-((freqs - peak) ** 2) / (2.0 * width**2))
    envelope += 0.05
    envelope *= 1.0 + 0.2 * jit * rng.normal(size=envelope.size)
    phases = profile.phases[: harmonics.size]
    wave = (envelope[:, None] * np.sin(
        2.0 * np.pi * freqs[:, None] * t[None, :] + phases[:, None]
    )).sum(axis=0)
    wave /= np.max(np.abs(wave))
    modulation = 0.5 + 0.5 * (
        0.5 + 0.5 * np.sin(2.0 * np.pi * profile.mod_rate * t + profile.mod_phase)
    )
    return profile.level * wave * modulation


def _synthesize_utterance(
    rng: np.random.Generator, profile: _VoiceProfile, config: SynthesisConfig
) -> Waveform:
    sr = config.sample_rate
    lead = np.zeros(int(round(profile.lead_seconds * sr)))
    pieces = [lead]
    for k in range(profile.segments):
        pieces.append(_voiced_segment(rng, profile, config))
        if k + 1 < profile.segments:
            pieces.append(np.zeros(int(round(profile.pause_seconds * sr))))
    pieces.append(np.zeros(int(round(profile.lead_seconds * sr))))
    samples = np.concatenate(pieces)
    if config.noise_level > 0:
        samples = samples + config.noise_level * rng.normal(size=samples.size)
    return Waveform(np.clip(samples, -0.98, 0.98), sr)


def synthesize_cohort(config: SynthesisConfig, out_dir: str | Path) -> CohortManifest:
    """Generate WAV files plus a manifest for a synthetic cohort.

    Fully determined by config.seed: speaker attributes, per-utterance
    jitter, and noise all come from one seeded generator.
    """
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    assignments = _assign_groups(config)
    speakers: list[SpeakerRecord] = []
    for index in range(config.n_speakers):
        group = assignments[index]
        profile, age, wrr = _draw_profile(rng, config, group)
        sid = f"spk{index:03d}"
        paths: list[str] = []
        for utt in range(config.utterances_per_speaker):
            waveform = _synthesize_utterance(rng, profile, config)
            rel = f"wav/{sid}_utt{utt:02d}.wav"
            save_waveform(waveform, out_dir / rel)
            paths.append(rel)
        speakers.append(SpeakerRecord(sid, group.name, age, wrr, paths))
    manifest = CohortManifest(
        speakers=speakers,
        root=out_dir,
        provenance={"generator": {k: str(v) for k, v in asdict(config).items()}},
    )
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest


# --- cohort sampling and splitting ---------------------------------------------


def sample_cohort(
    manifest: CohortManifest,
    n: int,
    rng: np.random.Generator,
    target_mean_age: float | None = None,
    age_tolerance: float = 0.5,
    max_attempts: int = 1000,
) -> list[SpeakerRecord]:
    """Uniform sample of n speakers, age-matched by bounded rejection.

    When a target mean age is given, draws are repeated until the sample
    mean falls within tolerance; after max_attempts the closest attempt is
    returned with a warning.
    """
    speakers = sorted(manifest.speakers, key=lambda s: s.speaker_id)
    if n > len(speakers):
        raise ValueError(f"requested {n} speakers, manifest has {len(speakers)}")
    if target_mean_age is None:
        picks = rng.choice(len(speakers), n, replace=False)
        return [speakers[k] for k in sorted(picks)]
    best: list[int] | None = None
    best_gap = np.inf
    for _ in range(max_attempts):
        picks = sorted(rng.choice(len(speakers), n, replace=False))
        gap = abs(float(np.mean([speakers[k].age for k in picks])) - target_mean_age)
        if gap < best_gap:
            best, best_gap = list(picks), gap
        if gap <= age_tolerance:
            return [speakers[k] for k in picks]
    warnings.warn(
        f"age matching missed the target after {max_attempts} attempts "
        f"(best gap {best_gap:.2f} > {age_tolerance}); using the closest draw",
        stacklevel=2,
    )
    assert best is not None
    return [speakers[k] for k in best]


def split_train_test(
    cohort: Sequence[SpeakerRecord], train_fraction: float, rng: np.random.Generator
) -> tuple[list[SpeakerRecord], list[SpeakerRecord]]:
    """Shuffled split; the train side is rounded half-up, both sides non-empty."""
    if len(cohort) < 5:
        raise ValueError(f"split needs at least 5 speakers, got {len(cohort)}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(np.floor(len(cohort) * train_fraction + 0.5))
    n_train = max(1, min(n_train, len(cohort) - 1))
    order = rng.permutation(len(cohort))
    train = [cohort[k] for k in order[:n_train]]
    test = [cohort[k] for k in order[n_train:]]
    return train, test


# --- feature pool --------------------------------------------------------------


def build_feature_pool(
    speakers: Sequence[SpeakerRecord],
    manifest: CohortManifest,
    vad_config: VadConfig | None = None,
) -> tuple[dict[str, list[np.ndarray]], dict[str, float]]:
    """Preprocess speakers' audio into per-speaker partial feature lists.

    Returns (pool, audio hours per speaker). Speakers whose audio yields no
    retained partial are dropped with a warning.
    """
    vad_config = vad_config or VadConfig()
    bank = mel_filterbank()
    pool: dict[str, list[np.ndarray]] = {}
    hours: dict[str, float] = {}
    for record in speakers:
        parts: list[np.ndarray] = []
        seconds = 0.0
        for rel in record.utterances:
            waveform = normalize_volume(load_waveform(manifest.resolve(rel)))
            seconds += waveform.duration_seconds
            intervals = prune_quiet_intervals(
                detect_voice_activity(waveform, vad_config),
                waveform,
                vad_config.prune_threshold_db,
            )
            for partial in segment_partials(waveform, intervals, rel):
                parts.append(extract_logmel(partial, waveform.sample_rate, bank))
        if parts:
            pool[record.speaker_id] = parts
            hours[record.speaker_id] = seconds / 3600.0
        else:
            log.warning("speaker %s yielded no usable partials; dropped", record.speaker_id)
    return pool, hours


# --- experiment harness ---------------------------------------------------------


@dataclass
class ExperimentSpec:
    """Flat, serializable description of one cohort experiment."""

    name: str = "experiment"
    speaker_count: int = 8
    repetitions: int = 20
    train_fraction: float = 0.8
    target_mean_age: float | None = None
    age_tolerance: float = 0.5
    eval_m: int = 2
    master_seed: int = 0
    steps: int = 500
    learning_rate: float = 5e-5
    batch_speakers: int = 16
    batch_utterances: int = 4
    min_frames: int = 140
    max_frames: int = 180
    hidden_size: int = 768
    num_layers: int = 3
    embedding_dim: int = 256

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.eval_m < 2:
            raise ValueError("eval_m must be >= 2")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentSpec":
        path = Path(path)
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib

            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"{path}: unknown experiment keys {unknown}")
        return cls(**data)


@dataclass
class RepetitionResult:
    repetition: int
    seed: int
    eer_percent: float
    n_train: int
    n_test: int
    train_hours: float
    test_hours: float
    train_mean_age: float
    test_mean_age: float
    test_mean_wrr: float
    wrr_eer_r: float | None
    train_speakers: list[str]
    test_speakers: list[str]
    init_digest: str
    final_digest: str


@dataclass
class ExperimentReport:
    name: str
    spec: dict
    repetitions: list[RepetitionResult]
    eer_mean: float
    eer_std: float | None
    shapiro_w: float | None
    shapiro_p: float | None
    wrr_r_across: float | None
    wrr_r_per_rep_mean: float | None
    wrr_r_per_rep_std: float | None

    @property
    def eers(self) -> list[float]:
        return [r.eer_percent for r in self.repetitions]


def _run_repetition(args) -> RepetitionResult:
    spec, manifest, pool, hours, repetition = args
    seed = spec.master_seed + repetition
    rng = np.random.default_rng([seed, 0])
    cohort = sample_cohort(
        manifest, spec.speaker_count, rng,
        target_mean_age=spec.target_mean_age, age_tolerance=spec.age_tolerance,
    )
    train_speakers, test_speakers = split_train_test(cohort, spec.train_fraction, rng)
    train_pool = {
        s.speaker_id: pool[s.speaker_id] for s in train_speakers if s.speaker_id in pool
    }
    batch_spec = BatchSpec(
        n_speakers=min(spec.batch_speakers, len(train_pool)),
        m_utterances=spec.batch_utterances,
        min_frames=spec.min_frames,
        max_frames=spec.max_frames,
    )
    config = TrainConfig(steps=spec.steps, learning_rate=spec.learning_rate, seed=seed)
    shape = NetworkShape(
        hidden_size=spec.hidden_size,
        num_layers=spec.num_layers,
        embedding_dim=spec.embedding_dim,
    )
    result = train(train_pool, config, batch_spec, shape)
    test_map = {
        s.speaker_id: [(rel, manifest.resolve(rel)) for rel in s.utterances]
        for s in test_speakers
    }
    evaluation = evaluate(result.params, test_map, m_utterances=spec.eval_m, seed=seed)
    wrr_by_speaker = {s.speaker_id: s.wrr for s in test_speakers}
    shared = [sid for sid in evaluation.per_speaker_eer if sid in wrr_by_speaker]
    wrr_eer_r: float | None = None
    if len(shared) >= 2:
        eers = [evaluation.per_speaker_eer[sid] for sid in shared]
        wrrs = [wrr_by_speaker[sid] for sid in shared]
        try:
            wrr_eer_r = pearson(eers, wrrs)
        except ValueError:
            wrr_eer_r = None
    return RepetitionResult(
        repetition=repetition,
        seed=seed,
        eer_percent=evaluation.eer.eer_percent,
        n_train=len(train_speakers),
        n_test=len(test_speakers),
        train_hours=sum(hours.get(s.speaker_id, 0.0) for s in train_speakers),
        test_hours=sum(hours.get(s.speaker_id, 0.0) for s in test_speakers),
        train_mean_age=float(np.mean([s.age for s in train_speakers])),
        test_mean_age=float(np.mean([s.age for s in test_speakers])),
        test_mean_wrr=float(np.mean([s.wrr for s in test_speakers])),
        wrr_eer_r=wrr_eer_r,
        train_speakers=sorted(s.speaker_id for s in train_speakers),
        test_speakers=sorted(s.speaker_id for s in test_speakers),
        init_digest=result.init_digest,
        final_digest=result.final_digest,
    )


def run_experiment(
    spec: ExperimentSpec,
    manifest: CohortManifest,
    out_dir: str | Path | None = None,
    jobs: int = 1,
) -> ExperimentReport:
    """Run the full repetition protocol and aggregate the results.

    Features are extracted once for the whole manifest and shared across
    repetitions; each repetition re-samples the cohort, splits it, trains
    from a fresh seeded initialization, and evaluates on its test split.
    """
    pool, hours = build_feature_pool(manifest.speakers, manifest)
    tasks = [(spec, manifest, pool, hours, r) for r in range(spec.repetitions)]
    results: list[RepetitionResult] = []
    if jobs > 1 and spec.repetitions > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool_exec:
            futures = list(pool_exec.map(_run_repetition, tasks))
        results = list(futures)
    else:
        for task in tasks:
            try:
                results.append(_run_repetition(task))
            except Exception as exc:
                raise ExperimentError(f"repetition {task[-1]} failed: {exc}") from exc

    eers = [r.eer_percent for r in results]
    eer_std = float(np.std(eers, ddof=1)) if len(eers) >= 2 else None
    shapiro_w = shapiro_p = None
    if 3 <= len(eers) <= 5000:
        try:
            sw = shapiro_wilk(eers)
            shapiro_w, shapiro_p = sw.statistic, sw.p_value
        except ValueError:
            pass
    wrr_r_across = None
    if len(eers) >= 2:
        try:
            wrr_r_across = pearson(eers, [r.test_mean_wrr for r in results])
        except ValueError:
            pass
    per_rep = [r.wrr_eer_r for r in results if r.wrr_eer_r is not None]
    report = ExperimentReport(
        name=spec.name,
        spec=asdict(spec),
        repetitions=results,
        eer_mean=float(np.mean(eers)),
        eer_std=eer_std,
        shapiro_w=shapiro_w,
        shapiro_p=shapiro_p,
        wrr_r_across=wrr_r_across,
        wrr_r_per_rep_mean=float(np.mean(per_rep)) if per_rep else None,
        wrr_r_per_rep_std=float(np.std(per_rep, ddof=1)) if len(per_rep) >= 2 else None,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_report_csv(out_dir / f"{spec.name}_repetitions.csv", report)
        write_report_json(out_dir / f"{spec.name}_report.json", report)
    return report


def compare_reports(a: ExperimentReport, b: ExperimentReport, welch: bool = False) -> TestResult:
    """Unpaired t-test between the per-repetition EERs of two experiments."""
    return t_test_unpaired(a.eers, b.eers, welch=welch)


_CSV_COLUMNS = [
    "repetition", "seed", "eer_percent", "n_train", "n_test", "train_hours",
    "test_hours", "train_mean_age", "test_mean_age", "test_mean_wrr", "wrr_eer_r",
]


def write_report_csv(path: str | Path, report: ExperimentReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in report.repetitions:
            writer.writerow(
                [r.repetition, r.seed, f"{r.eer_percent:.9g}", r.n_train, r.n_test,
                 f"{r.train_hours:.9g}", f"{r.test_hours:.9g}",
                 f"{r.train_mean_age:.9g}", f"{r.test_mean_age:.9g}",
                 f"{r.test_mean_wrr:.9g}",
                 "" if r.wrr_eer_r is None else f"{r.wrr_eer_r:.9g}"]
            )


def write_report_json(path: str | Path, report: ExperimentReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "name": report.name,
        "spec": report.spec,
        "aggregate": {
            "eer_mean": report.eer_mean,
            "eer_std": report.eer_std,
            "shapiro_w": report.shapiro_w,
            "shapiro_p": report.shapiro_p,
            "wrr_r_across": report.wrr_r_across,
            "wrr_r_per_rep_mean": report.wrr_r_per_rep_mean,
            "wrr_r_per_rep_std": report.wrr_r_per_rep_std,
        },
        "repetitions": [asdict(r) for r in report.repetitions],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_report_json(path: str | Path) -> ExperimentReport:
    data = json.loads(Path(path).read_text())
    reps = [RepetitionResult(**r) for r in data["repetitions"]]
    agg = data["aggregate"]
    return ExperimentReport(
        name=data["name"],
        spec=data["spec"],
        repetitions=reps,
        eer_mean=agg["eer_mean"],
        eer_std=agg["eer_std"],
        shapiro_w=agg["shapiro_w"],
        shapiro_p=agg["shapiro_p"],
        wrr_r_across=agg["wrr_r_across"],
        wrr_r_per_rep_mean=agg["wrr_r_per_rep_mean"],
        wrr_r_per_rep_std=agg["wrr_r_per_rep_std"],
    )
