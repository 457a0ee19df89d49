"""Parametric per-subject gait generator with paired fatigue states.

Each subject walks with per-joint sinusoids over the stance phase; the
fatigued state perturbs amplitude, baseline offset, stride length, and
stance-duration jitter with subject-specific deltas, so that spatial and
temporal fatigue signatures are well separated across subjects while
closed-form oracles (extrema, durations) stay available for tests.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError
from .motion import (
    MotionSequence,
    StanceSegmentation,
    SubjectId,
    load_motion_csv,
    motion_channels,
    save_motion_csv,
    segment_stances,
)

# Joints whose range shrinks vs. grows in the fatigued state; anything not
# listed gets a random direction per subject.
FATIGUE_SHRINK = ("hip_rotation_r", "hip_adduction_r", "lumbar_extension", "ankle_angle_r")
FATIGUE_GROW = ("lumbar_bending", "knee_angle_r", "hip_flexion_r", "subtalar_angle_r")

DEFAULT_JOINTS = (
    "lumbar_extension",
    "lumbar_bending",
    "hip_flexion_r",
    "hip_adduction_r",
    "hip_rotation_r",
    "knee_angle_r",
    "ankle_angle_r",
    "subtalar_angle_r",
)


@dataclass(frozen=True)
class SynthConfig:
    joint_names: tuple[str, ...] = DEFAULT_JOINTS
    frame_rate: float = 128.0
    amplitude_range: tuple[float, float] = (12.0, 25.0)  # degrees
    baseline_range: tuple[float, float] = (-8.0, 8.0)  # degrees
    phase_range: tuple[float, float] = (-1.0, 1.0)  # radians
    stance_period_range: tuple[float, float] = (80.0, 110.0)  # frames
    stance_jitter_range: tuple[float, float] = (0.8, 2.0)  # frames (std dev)
    stride_length_range: tuple[float, float] = (0.55, 0.75)  # meters
    amp_shrink_range: tuple[float, float] = (0.55, 0.85)
    amp_grow_range: tuple[float, float] = (1.15, 1.55)
    baseline_shift_range: tuple[float, float] = (3.0, 9.0)  # degrees, magnitude
    jitter_multiplier_range: tuple[float, float] = (1.8, 3.2)
    stride_scale_range: tuple[float, float] = (0.7, 0.92)

    def __post_init__(self):
        for name in (
            "amplitude_range",
            "baseline_range",
            "phase_range",
            "stance_period_range",
            "stance_jitter_range",
            "stride_length_range",
            "amp_shrink_range",
            "amp_grow_range",
            "baseline_shift_range",
            "jitter_multiplier_range",
            "stride_scale_range",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"degenerate range for {name}: ({lo}, {hi})")
        if self.stance_period_range[0] < 8:
            raise ConfigError("stance period mean must be >= 8 frames")
        if self.jitter_multiplier_range[0] < 1.0:
            raise ConfigError("fatigue jitter multiplier must be >= 1")


@dataclass(frozen=True)
class GaitProfile:
    subject: SubjectId
    joint_names: tuple[str, ...]
    amplitude: tuple[float, ...]  # degrees
    phase: tuple[float, ...]  # radians
    baseline: tuple[float, ...]  # degrees
    stance_period_mean: float  # frames
    stance_period_jitter: float  # frames, std dev
    stride_length: float  # meters
    fatigue_amp_scale: tuple[float, ...]
    fatigue_baseline_shift: tuple[float, ...]  # degrees
    fatigue_jitter_multiplier: float
    fatigue_stride_scale: float

    def __post_init__(self):
        if any(a <= 0 for a in self.amplitude):
            raise ValidationError("amplitudes must be positive")
        if self.stance_period_mean < 8:
            raise ValidationError("stance period mean must be >= 8 frames")
        if self.fatigue_jitter_multiplier < 1.0:
            raise ValidationError("fatigue jitter multiplier must be >= 1")
        if any(not 0 < s <= 2 for s in self.fatigue_amp_scale):
            raise ValidationError("fatigue amplitude scales must lie in (0, 2]")


def generate_subject_profile(
    seed: int, subject: SubjectId, config: SynthConfig = SynthConfig()
) -> GaitProfile:
    """Deterministic per-(seed, subject) draw of gait and fatigue parameters."""
    rng = np.random.default_rng([int(seed), int(subject), 0xB10])
    J = len(config.joint_names)
    u = lambda lo_hi, n=None: rng.uniform(*lo_hi, size=n)
    amp_scale, base_shift = [], []
    for name in config.joint_names:
        if name in FATIGUE_SHRINK:
            direction = -1
        elif name in FATIGUE_GROW:
            direction = 1
        else:
            direction = 1 if rng.random() < 0.5 else -1
        if direction < 0:
            amp_scale.append(float(u(config.amp_shrink_range)))
        else:
            amp_scale.append(float(u(config.amp_grow_range)))
        base_shift.append(direction * float(u(config.baseline_shift_range)))
    return GaitProfile(
        subject=subject,
        joint_names=config.joint_names,
        amplitude=tuple(u(config.amplitude_range, J)),
        phase=tuple(u(config.phase_range, J)),
        baseline=tuple(u(config.baseline_range, J)),
        stance_period_mean=float(u(config.stance_period_range)),
        stance_period_jitter=float(u(config.stance_jitter_range)),
        stride_length=float(u(config.stride_length_range)),
        fatigue_amp_scale=tuple(amp_scale),
        fatigue_baseline_shift=tuple(base_shift),
        fatigue_jitter_multiplier=float(u(config.jitter_multiplier_range)),
        fatigue_stride_scale=float(u(config.stride_scale_range)),
    )


def _stance_durations(profile: GaitProfile, fatigued: bool, n_strides: int, rng) -> list[int]:
    jitter = profile.stance_period_jitter * (
        profile.fatigue_jitter_multiplier if fatigued else 1.0
    )
    mean = round(profile.stance_period_mean)
    out = []
    for _ in range(n_strides):
        d = mean if jitter == 0 else int(round(rng.normal(mean, jitter)))
        out.append(int(np.clip(d, 8, 260)))
    return out


def generate_gait(
    profile: GaitProfile,
    state: str,
    n_strides: int,
    seed: int,
    frame_rate: float = 128.0,
) -> tuple[MotionSequence, StanceSegmentation]:
    """Synthesize one walking bout; ``state`` is 'nonfatigued' or 'fatigued'."""
    if state not in ("nonfatigued", "fatigued"):
        raise ConfigError(f"unknown gait state {state!r}")
    if n_strides < 2:
        raise ValidationError("need at least 2 strides")
    fatigued = state == "fatigued"
    rng = np.random.default_rng([int(seed), int(profile.subject), 1 if fatigued else 0])

    amp = np.array(profile.amplitude)
    base = np.array(profile.baseline)
    phase = np.array(profile.phase)
    stride = profile.stride_length
    if fatigued:
        amp = amp * np.array(profile.fatigue_amp_scale)
        base = base + np.array(profile.fatigue_baseline_shift)
        stride = stride * profile.fatigue_stride_scale

    durations = _stance_durations(profile, fatigued, n_strides, rng)
    blocks = []
    x0 = 0.0
    for dur in durations:
        phi = np.arange(dur) / dur  # stance phase in [0, 1)
        joints = base + amp * np.sin(2 * math.pi * phi[:, None] + phase)
        root_x = x0 + stride * np.arange(1, dur + 1) / dur
        root_y = 0.9 + 0.015 * np.sin(4 * math.pi * phi)
        root_z = 0.01 * np.sin(2 * math.pi * phi)
        x0 = root_x[-1]
        blocks.append(np.column_stack([joints, root_x, root_y, root_z]))
    data = np.vstack(blocks)
    seq = MotionSequence(motion_channels(profile.joint_names), data, frame_rate)
    boundaries = np.concatenate([[0], np.cumsum(durations)[:-1]])
    return seq, StanceSegmentation(tuple(boundaries), seq.n_frames)


@dataclass(frozen=True)
class SubjectRecord:
    subject: SubjectId
    profile: GaitProfile | None  # None for externally ingested data
    nonfatigued: MotionSequence
    seg_nonfatigued: StanceSegmentation
    fatigued: MotionSequence
    seg_fatigued: StanceSegmentation


@dataclass(frozen=True)
class DatasetBundle:
    subjects: tuple[SubjectRecord, ...]
    split: dict = field(default_factory=dict)  # subject id -> "train" | "val"
    seed: int = 0

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def joint_names(self) -> tuple[str, ...]:
        return self.subjects[0].nonfatigued.joint_names

    def record(self, subject: SubjectId) -> SubjectRecord:
        for rec in self.subjects:
            if rec.subject == subject:
                return rec
        raise ValidationError(f"subject {subject} not in bundle")

    def train_subjects(self) -> list[SubjectId]:
        return [r.subject for r in self.subjects if self.split.get(r.subject) != "val"]

    def val_subjects(self) -> list[SubjectId]:
        return [r.subject for r in self.subjects if self.split.get(r.subject) == "val"]


def build_dataset(
    n_subjects: int = 16,
    n_strides: int = 60,
    seed: int = 0,
    config: SynthConfig = SynthConfig(),
    val_fraction: float = 0.25,
) -> DatasetBundle:
    """Paired nonfatigued/fatigued bouts for ``n_subjects`` synthetic walkers.

    The last ``val_fraction`` of subjects is assigned to the validation
    split (used by the dynamics surrogates; the latent models hold out
    stances within each subject instead, since conditioning needs every
    label at training time).
    """
    if n_subjects < 2:
        raise ValidationError("fusion requires at least 2 subjects")
    records = []
    for s in range(n_subjects):
        profile = generate_subject_profile(seed, s, config)
        q_nf, seg_nf = generate_gait(profile, "nonfatigued", n_strides, seed, config.frame_rate)
        q_f, seg_f = generate_gait(profile, "fatigued", n_strides, seed, config.frame_rate)
        records.append(SubjectRecord(s, profile, q_nf, seg_nf, q_f, seg_f))
    n_val = max(1, int(round(val_fraction * n_subjects))) if n_subjects > 2 else 0
    split = {r.subject: ("val" if r.subject >= n_subjects - n_val else "train") for r in records}
    return DatasetBundle(tuple(records), split, seed)


# ---------------------------------------------------------------------------
# On-disk layout: subject_<id>/{nonfatigued,fatigued}.csv + manifest.json
# ---------------------------------------------------------------------------


def save_dataset(bundle: DatasetBundle, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    manifest = {"seed": bundle.seed, "split": {str(k): v for k, v in bundle.split.items()}, "subjects": {}}
    for rec in bundle.subjects:
        sub_dir = os.path.join(out_dir, f"subject_{rec.subject}")
        os.makedirs(sub_dir, exist_ok=True)
        save_motion_csv(rec.nonfatigued, os.path.join(sub_dir, "nonfatigued.csv"))
        save_motion_csv(rec.fatigued, os.path.join(sub_dir, "fatigued.csv"))
        manifest["subjects"][str(rec.subject)] = {
            "nonfatigued": f"subject_{rec.subject}/nonfatigued.csv",
            "fatigued": f"subject_{rec.subject}/fatigued.csv",
            "boundaries_nonfatigued": list(rec.seg_nonfatigued.boundaries),
            "boundaries_fatigued": list(rec.seg_fatigued.boundaries),
            "profile": asdict(rec.profile),
        }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def _profile_from_dict(obj: dict) -> GaitProfile:
    obj = dict(obj)
    for key in ("joint_names", "amplitude", "phase", "baseline", "fatigue_amp_scale", "fatigue_baseline_shift"):
        obj[key] = tuple(obj[key])
    return GaitProfile(**obj)


def ingest_external_csv(data_dir, manifest: dict | None = None, **seg_params) -> DatasetBundle:
    """Load a dataset directory produced by :func:`save_dataset` or prepared
    externally.  ``manifest`` defaults to ``<dir>/manifest.json``; boundary
    lists in the manifest take precedence, otherwise stances are detected
    with ``segment_stances(**seg_params)``."""
    if manifest is None:
        mpath = os.path.join(data_dir, "manifest.json")
        if not os.path.exists(mpath):
            raise ValidationError(f"no manifest.json under {data_dir}")
        with open(mpath, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    records = []
    channels = None
    for key in sorted(manifest["subjects"], key=int):
        entry = manifest["subjects"][key]
        subject = int(key)
        for state in ("nonfatigued", "fatigued"):
            if state not in entry:
                raise ValidationError(f"subject {subject} lacks a {state} file")
        seqs, segs = {}, {}
        for state in ("nonfatigued", "fatigued"):
            seq = load_motion_csv(os.path.join(data_dir, entry[state]))
            if channels is None:
                channels = seq.channels
            elif seq.channels != channels:
                raise ValidationError(f"channel mismatch in subject {subject} {state} file")
            bkey = f"boundaries_{state}"
            if bkey in entry:
                seg = StanceSegmentation(tuple(entry[bkey]), seq.n_frames)
            else:
                seg = segment_stances(seq, **seg_params)
            seqs[state], segs[state] = seq, seg
        profile = _profile_from_dict(entry["profile"]) if "profile" in entry else None
        records.append(
            SubjectRecord(
                subject, profile, seqs["nonfatigued"], segs["nonfatigued"],
                seqs["fatigued"], segs["fatigued"],
            )
        )
    split = {int(k): v for k, v in manifest.get("split", {}).items()}
    return DatasetBundle(tuple(records), split, manifest.get("seed", 0))
