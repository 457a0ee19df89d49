import numpy as np
import pytest

from gaitfuse.errors import ValidationError
from gaitfuse.motion import (
    ChannelSpec,
    ControlParams,
    MotionSequence,
    StanceSegmentation,
    TorqueSequence,
    load_motion_csv,
    motion_channels,
    save_motion_csv,
    segment_stances,
    torque_channels,
)


def make_seq(data, joints=("hip", "knee"), rate=128.0):
    return MotionSequence(motion_channels(joints), data, rate)


def test_load_minimal_file(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(
        "# frame_rate=128.0\n"
        "hip:angle,knee:angle,root_x:root,root_y:root,root_z:root\n"
        "1,2,0.0,0.9,0\n"
        "3,4,0.1,0.9,0\n"
        "5,6,0.2,0.9,0\n"
    )
    seq = load_motion_csv(p)
    assert seq.n_frames == 3
    assert len(seq.joint_names) == 2
    assert seq.frame_rate == 128.0


def test_load_nan_cell_names_row_and_column(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(
        "# frame_rate=128.0\n"
        "hip:angle,root_x:root,root_y:root,root_z:root\n"
        "1,0,0.9,0\n"
        "NaN,0.1,0.9,0\n"
    )
    with pytest.raises(ValidationError, match="row 1, column 0"):
        load_motion_csv(p)


def test_csv_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.normal(size=(17, 5)) * 40.0
    seq = make_seq(data)
    path = tmp_path / "seq.csv"
    save_motion_csv(seq, path)
    back = load_motion_csv(path)
    assert back.channels == seq.channels
    assert back.frame_rate == seq.frame_rate
    np.testing.assert_array_equal(back.data, seq.data)


def test_save_row_count_and_min_frames(tmp_path):
    seq = make_seq(np.zeros((2, 5)))
    path = tmp_path / "two.csv"
    save_motion_csv(seq, path)
    assert len(path.read_text().strip().splitlines()) == 2 + 2
    # a 1-frame sequence is rejected by the type invariant
    with pytest.raises(ValidationError):
        make_seq(np.zeros((1, 5)))


def test_empty_channel_list_rejected():
    with pytest.raises(ValidationError):
        ChannelSpec((), ())


def test_duplicate_channel_name_rejected():
    with pytest.raises(ValidationError, match="duplicate"):
        ChannelSpec(("a", "a"), ("angle", "angle"))


def test_malformed_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("frame_rate 128\nhip:angle\n1\n")
    with pytest.raises(ValidationError, match="malformed header"):
        load_motion_csv(p)


def test_angle_range_enforced():
    data = np.zeros((3, 5))
    data[1, 0] = 400.0
    with pytest.raises(ValidationError, match="angle"):
        make_seq(data)


def test_nonfinite_matrix_rejected():
    data = np.zeros((3, 5))
    data[2, 1] = np.inf
    with pytest.raises(ValidationError, match="non-finite"):
        make_seq(data)


def test_torque_sequence_rejects_root_channels():
    with pytest.raises(ValidationError):
        TorqueSequence(motion_channels(("hip",)), np.zeros((3, 4)), 128.0)
    tq = TorqueSequence(torque_channels(("hip", "knee")), np.zeros((3, 2)), 128.0)
    assert tq.n_frames == 3


def test_provided_boundaries_stumbling_gait():
    # irregular stance durations of a stumbling fatigued gait
    data = np.zeros((293, 5))
    data[:, 2] = np.arange(293) * 0.01  # root_x monotone
    seq = make_seq(data)
    seg = segment_stances(
        seq, "provided", boundaries=(0, 76, 106, 167, 192, 263)
    )
    assert seg.durations == (76, 30, 61, 25, 71, 30)
    assert sum(seg.durations) == seq.n_frames


def test_provided_boundaries_sum_to_total():
    seq = make_seq(np.zeros((323, 5)))
    seg = segment_stances(
        seq, "provided", boundaries=(0, 76, 106, 167, 192, 263, 293)
    )
    assert seg.durations == (76, 30, 61, 25, 71, 30, 30)
    assert sum(seg.durations) == 323


def test_provided_boundaries_must_start_at_zero():
    seq = make_seq(np.zeros((50, 5)))
    with pytest.raises(ValidationError):
        segment_stances(seq, "provided", boundaries=(5, 20))


def test_threshold_detection_known_period():
    P = 20
    t = np.arange(5 * P)
    contact = np.where((t % P) < P // 2, 1.0, -1.0)  # foot down at stance start
    data = np.zeros((t.size, 5))
    data[:, 0] = contact
    seq = make_seq(data, joints=("contact", "knee"))
    seg = segment_stances(seq, "threshold", channel="contact", threshold=0.0)
    assert set(seg.durations) == {P}


def test_threshold_constant_zero_no_boundary():
    seq = make_seq(np.zeros((40, 5)))
    with pytest.raises(ValidationError, match="no boundary"):
        segment_stances(seq, "threshold", channel="hip", threshold=0.0)


def test_short_stance_rejected():
    seq = make_seq(np.zeros((20, 5)))
    with pytest.raises(ValidationError, match="minimum"):
        segment_stances(seq, "provided", boundaries=(0, 2), min_stance_frames=4)


def test_segmentation_invariants():
    seg = StanceSegmentation((0, 10, 25), 40)
    assert seg.durations == (10, 15, 15)
    with pytest.raises(ValidationError):
        StanceSegmentation((0, 25, 10), 40)
    with pytest.raises(ValidationError):
        StanceSegmentation((0, 45), 40)


def test_control_params_validation():
    cp = ControlParams(label=1, fusion_weights=(0.3, 0.7))
    assert cp.fusion_weights == (0.3, 0.7)
    with pytest.raises(ValidationError):
        ControlParams(label=0, fusion_weights=(0.5, 0.6))
    with pytest.raises(ValidationError):
        ControlParams(label=0, fusion_weights=(-0.1, 1.1))
    with pytest.raises(Exception):
        ControlParams(label=0, tempo=(1, 30))
