import dataclasses

import numpy as np
import pytest

from gaitfuse.errors import ConfigError, ValidationError
from gaitfuse.motion import load_motion_csv
from gaitfuse.synth import (
    DEFAULT_JOINTS,
    GaitProfile,
    SynthConfig,
    build_dataset,
    generate_gait,
    generate_subject_profile,
    ingest_external_csv,
    save_dataset,
)


def flat_profile(**overrides):
    J = 3
    base = dict(
        subject=0,
        joint_names=("hip_flexion_r", "knee_angle_r", "ankle_angle_r"),
        amplitude=(20.0, 25.0, 10.0),
        phase=(0.0, 0.5, -0.5),
        baseline=(2.0, -3.0, 1.0),
        stance_period_mean=32.0,
        stance_period_jitter=0.0,
        stride_length=0.6,
        fatigue_amp_scale=(1.0,) * J,
        fatigue_baseline_shift=(0.0,) * J,
        fatigue_jitter_multiplier=1.0,
        fatigue_stride_scale=1.0,
    )
    base.update(overrides)
    return GaitProfile(**base)


def test_profile_deterministic():
    a = generate_subject_profile(7, 3)
    b = generate_subject_profile(7, 3)
    assert a == b


def test_profiles_differ_across_subjects():
    a = generate_subject_profile(7, 0)
    b = generate_subject_profile(7, 1)
    assert a != b
    assert a.fatigue_amp_scale != b.fatigue_amp_scale


def test_degenerate_range_rejected():
    with pytest.raises(ConfigError, match="degenerate"):
        SynthConfig(amplitude_range=(30.0, 10.0))


def test_zero_jitter_durations_equal_mean():
    seq, seg = generate_gait(flat_profile(), "nonfatigued", 5, seed=0)
    assert set(seg.durations) == {32}
    assert seq.n_frames == 5 * 32


def test_fatigue_amp_scale_on_knee():
    prof = flat_profile(fatigue_amp_scale=(1.0, 1.2, 1.0))
    nf, _ = generate_gait(prof, "nonfatigued", 4, seed=0)
    f, _ = generate_gait(prof, "fatigued", 4, seed=0)
    knee = prof.joint_names.index("knee_angle_r")
    pk_nf = np.ptp(nf.joint_data()[:, knee])
    pk_f = np.ptp(f.joint_data()[:, knee])
    assert pk_f == pytest.approx(1.2 * pk_nf, abs=1e-6)


def test_fatigued_durations_more_irregular():
    prof = generate_subject_profile(11, 2)
    _, seg_nf = generate_gait(prof, "nonfatigued", 50, seed=1)
    _, seg_f = generate_gait(prof, "fatigued", 50, seed=1)
    assert np.std(seg_f.durations) > np.std(seg_nf.durations)


def test_root_translation_strictly_increasing():
    prof = generate_subject_profile(5, 1)
    for state in ("nonfatigued", "fatigued"):
        seq, _ = generate_gait(prof, state, 6, seed=2)
        root_x = seq.root_data()[:, 0]
        assert np.all(np.diff(root_x) > 0)


def test_fatigued_differs_in_amplitude_offset_duration():
    cfg = SynthConfig(stance_jitter_range=(1.0, 2.0))
    for s in range(4):
        prof = generate_subject_profile(3, s, cfg)
        nf, seg_nf = generate_gait(prof, "nonfatigued", 40, seed=3)
        f, seg_f = generate_gait(prof, "fatigued", 40, seed=3)
        j_nf, j_f = nf.joint_data(), f.joint_data()
        assert not np.allclose(j_nf.std(axis=0), j_f[: j_nf.shape[0]].std(axis=0), rtol=0.02)
        assert not np.allclose(j_nf.mean(axis=0), j_f[: j_nf.shape[0]].mean(axis=0), atol=0.5)
        assert np.std(seg_f.durations) > np.std(seg_nf.durations)


def test_min_strides():
    with pytest.raises(ValidationError):
        generate_gait(flat_profile(), "nonfatigued", 1, seed=0)


def test_build_dataset_16_subjects():
    bundle = build_dataset(n_subjects=16, n_strides=2, seed=4)
    assert bundle.n_subjects == 16
    assert bundle.joint_names == DEFAULT_JOINTS
    assert set(bundle.split.values()) == {"train", "val"}


def test_build_dataset_rejects_single_subject():
    with pytest.raises(ValidationError):
        build_dataset(n_subjects=1, n_strides=2, seed=0)


def test_build_dataset_deterministic():
    a = build_dataset(n_subjects=3, n_strides=3, seed=9)
    b = build_dataset(n_subjects=3, n_strides=3, seed=9)
    for ra, rb in zip(a.subjects, b.subjects):
        np.testing.assert_array_equal(ra.nonfatigued.data, rb.nonfatigued.data)
        np.testing.assert_array_equal(ra.fatigued.data, rb.fatigued.data)
        assert ra.seg_fatigued == rb.seg_fatigued


def test_dataset_round_trip(tmp_path):
    bundle = build_dataset(n_subjects=2, n_strides=3, seed=6)
    save_dataset(bundle, tmp_path)
    back = ingest_external_csv(tmp_path)
    assert back.n_subjects == 2
    for ra, rb in zip(bundle.subjects, back.subjects):
        np.testing.assert_array_equal(ra.nonfatigued.data, rb.nonfatigued.data)
        assert ra.seg_nonfatigued.boundaries == rb.seg_nonfatigued.boundaries
        assert ra.profile == rb.profile
    # re-exported files equal originals
    out2 = tmp_path / "again"
    save_dataset(back, out2)
    orig = (tmp_path / "subject_0" / "fatigued.csv").read_text()
    again = (out2 / "subject_0" / "fatigued.csv").read_text()
    assert orig == again


def test_ingest_missing_pair_names_subject(tmp_path):
    bundle = build_dataset(n_subjects=2, n_strides=3, seed=6)
    save_dataset(bundle, tmp_path)
    import json

    mpath = tmp_path / "manifest.json"
    manifest = json.loads(mpath.read_text())
    del manifest["subjects"]["1"]["fatigued"]
    with pytest.raises(ValidationError, match="subject 1"):
        ingest_external_csv(tmp_path, manifest)


def test_ingest_channel_mismatch(tmp_path):
    bundle = build_dataset(n_subjects=2, n_strides=3, seed=6)
    save_dataset(bundle, tmp_path)
    other = build_dataset(
        n_subjects=2, n_strides=3, seed=6, config=SynthConfig(joint_names=("hip_flexion_r",))
    )
    from gaitfuse.motion import save_motion_csv

    save_motion_csv(other.subjects[1].fatigued, tmp_path / "subject_1" / "fatigued.csv")
    with pytest.raises(ValidationError, match="channel mismatch"):
        ingest_external_csv(tmp_path)


def test_invalid_state_rejected():
    with pytest.raises(ConfigError):
        generate_gait(flat_profile(), "tired", 3, seed=0)


def test_profile_invariants():
    with pytest.raises(ValidationError):
        flat_profile(amplitude=(0.0, 1.0, 1.0))
    with pytest.raises(ValidationError):
        flat_profile(fatigue_jitter_multiplier=0.5)
    with pytest.raises(ValidationError):
        dataclasses.replace(flat_profile(), fatigue_amp_scale=(2.5, 1.0, 1.0))
