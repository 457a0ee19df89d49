"""Motion/torque data model, CSV interchange, and stance segmentation.

Conventions fixed here and relied on everywhere else:

* A motion sequence is a ``T x (J+3)`` float64 matrix: ``J`` joint-angle
  channels in degrees followed by exactly 3 root-translation channels in
  meters.  Channel order is fixed for the lifetime of a dataset.
* A torque sequence is a ``T x J`` matrix of joint torques in N*m with
  joint-only channels, frame-aligned to its source motion.
* Stance segmentation is a list of stance-start frame indices; the first
  boundary is always 0 and durations partition ``[0, T)``.

Euler angle axis conventions are opaque to this package: every channel is
treated as an independent scalar signal, so consumers replaying motion
visually must fix their own axis/handedness conventions.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, ValidationError

KIND_ANGLE = "angle"
KIND_ROOT = "root"
KIND_TORQUE = "torque"

# Subject identifiers are plain small ints; range checks happen wherever the
# dataset size is known (bundles, embedding tables).
SubjectId = int

ANGLE_LIMIT_DEG = 360.0
WEIGHT_SUM_TOL = 1e-9


def _check_finite(data: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(data)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValidationError(f"{what} has non-finite value at row {r}, column {c}")


@dataclass(frozen=True)
class ChannelSpec:
    """Ordered channel names with per-channel kind tags."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if len(self.names) != len(self.kinds):
            raise ValidationError("names and kinds length mismatch")
        if not self.names:
            raise ValidationError("empty channel list")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("duplicate channel name")
        for k in self.kinds:
            if k not in (KIND_ANGLE, KIND_ROOT, KIND_TORQUE):
                raise ValidationError(f"unknown channel kind {k!r}")

    @property
    def n_channels(self) -> int:
        return len(self.names)

    @property
    def angle_indices(self) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.kinds) if k == KIND_ANGLE])

    @property
    def root_indices(self) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.kinds) if k == KIND_ROOT])

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown channel {name!r}") from None


def motion_channels(joint_names: list[str] | tuple[str, ...]) -> ChannelSpec:
    """Joint-angle channels followed by the fixed root_x/root_y/root_z block."""
    names = tuple(joint_names) + ("root_x", "root_y", "root_z")
    kinds = (KIND_ANGLE,) * len(joint_names) + (KIND_ROOT,) * 3
    return ChannelSpec(names, kinds)


def torque_channels(joint_names: list[str] | tuple[str, ...]) -> ChannelSpec:
    return ChannelSpec(tuple(joint_names), (KIND_TORQUE,) * len(joint_names))


@dataclass(frozen=True)
class MotionSequence:
    """Joint angles (degrees) plus root translation (meters) over T frames."""

    channels: ChannelSpec
    data: np.ndarray
    frame_rate: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.channels.n_channels:
            raise ShapeError(
                f"motion data shape {data.shape} does not match "
                f"{self.channels.n_channels} channels"
            )
        if data.shape[0] < 2:
            raise ValidationError("motion sequence needs at least 2 frames")
        if len(self.channels.root_indices) != 3:
            raise ValidationError("motion sequence requires exactly 3 root channels")
        _check_finite(data, "motion data")
        ang = data[:, self.channels.angle_indices]
        if ang.size and np.abs(ang).max() > ANGLE_LIMIT_DEG:
            raise ValidationError(
                f"joint angle outside [-{ANGLE_LIMIT_DEG}, {ANGLE_LIMIT_DEG}] degrees"
            )
        if self.frame_rate <= 0:
            raise ValidationError("frame_rate must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def joint_names(self) -> tuple[str, ...]:
        return tuple(self.channels.names[i] for i in self.channels.angle_indices)

    def joint_data(self) -> np.ndarray:
        return self.data[:, self.channels.angle_indices]

    def root_data(self) -> np.ndarray:
        return self.data[:, self.channels.root_indices]

    def with_data(self, data: np.ndarray) -> "MotionSequence":
        return MotionSequence(self.channels, data, self.frame_rate)


@dataclass(frozen=True)
class TorqueSequence:
    """Generalized joint torques (N*m), frame-aligned to a motion sequence."""

    channels: ChannelSpec
    data: np.ndarray
    frame_rate: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.channels.n_channels:
            raise ShapeError(
                f"torque data shape {data.shape} does not match "
                f"{self.channels.n_channels} channels"
            )
        if len(self.channels.root_indices) != 0:
            raise ValidationError("torque sequence must not carry root channels")
        _check_finite(data, "torque data")
        if self.frame_rate <= 0:
            raise ValidationError("frame_rate must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def with_data(self, data: np.ndarray) -> "TorqueSequence":
        return TorqueSequence(self.channels, data, self.frame_rate)


@dataclass(frozen=True)
class StanceSegmentation:
    """Stance-phase starts partitioning a T-frame sequence."""

    boundaries: tuple[int, ...]
    n_frames: int

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if not b:
            raise ValidationError("empty segmentation")
        if b[0] != 0:
            raise ValidationError("first stance boundary must be 0")
        if any(b[i + 1] <= b[i] for i in range(len(b) - 1)):
            raise ValidationError("stance boundaries must strictly increase")
        if b[-1] >= self.n_frames:
            raise ValidationError("stance boundary beyond sequence end")

    @property
    def durations(self) -> tuple[int, ...]:
        ends = self.boundaries[1:] + (self.n_frames,)
        return tuple(e - s for s, e in zip(self.boundaries, ends))

    @property
    def n_stances(self) -> int:
        return len(self.boundaries)


@dataclass(frozen=True)
class ControlParams:
    """User-facing control variables: subject label, fusion weights,
    tempo profile, and fatigue-intensity floor."""

    label: SubjectId
    fusion_weights: tuple[float, ...] = (0.0, 1.0)
    tempo: tuple[int, ...] | None = None  # None keeps the source tempo
    intensity_floor: float = 1.0
    intensity_enabled: bool = False

    def __post_init__(self):
        w = tuple(float(x) for x in self.fusion_weights)
        object.__setattr__(self, "fusion_weights", w)
        validate_fusion_weights(w)
        if self.tempo is not None:
            t = tuple(int(x) for x in self.tempo)
            object.__setattr__(self, "tempo", t)
            if any(d < 2 for d in t):
                raise ConfigError("tempo durations must be >= 2 frames")
        if not 0.0 <= self.intensity_floor <= 1.0:
            raise ConfigError("intensity floor u must lie in [0, 1]")
        if self.label < 0:
            raise ValidationError("subject label must be non-negative")


def validate_fusion_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 2:
        raise ValidationError("fusion weights must be a vector of length >= 2")
    if (w < 0).any():
        raise ValidationError("fusion weights must be non-negative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValidationError(f"fusion weights must sum to 1 (got {w.sum()!r})")
    return w


# ---------------------------------------------------------------------------
# CSV interchange
#
# Line 1:  "# frame_rate=<Hz>"
# Line 2:  comma-separated channel names suffixed ":angle" / ":root"
#          (":torque" for torque files)
# Line 3+: one row of float values per frame, full float64 precision.
# ---------------------------------------------------------------------------

_SUFFIX_TO_KIND = {"angle": KIND_ANGLE, "root": KIND_ROOT, "torque": KIND_TORQUE}


def _parse_header(path, lines) -> tuple[float, ChannelSpec]:
    if len(lines) < 2:
        raise ValidationError(f"{path}: missing header lines")
    first = lines[0].strip()
    if not first.startswith("#") or "frame_rate=" not in first:
        raise ValidationError(f"{path}: malformed header, expected '# frame_rate=<Hz>'")
    try:
        rate = float(first.split("frame_rate=", 1)[1])
    except ValueError:
        raise ValidationError(f"{path}: malformed frame_rate value") from None
    names, kinds = [], []
    for tok in lines[1].strip().split(","):
        if ":" not in tok:
            raise ValidationError(f"{path}: channel {tok!r} missing kind suffix")
        name, suffix = tok.rsplit(":", 1)
        if suffix not in _SUFFIX_TO_KIND:
            raise ValidationError(f"{path}: unknown channel suffix {suffix!r}")
        names.append(name)
        kinds.append(_SUFFIX_TO_KIND[suffix])
    return rate, ChannelSpec(tuple(names), tuple(kinds))


def _parse_rows(path, lines, n_channels: int) -> np.ndarray:
    rows = []
    for r, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        vals = line.split(",")
        if len(vals) != n_channels:
            raise ValidationError(
                f"{path}: row {r} has {len(vals)} values, expected {n_channels}"
            )
        try:
            row = [float(v) for v in vals]
        except ValueError:
            raise ValidationError(f"{path}: unparseable value in row {r}") from None
        for c, v in enumerate(row):
            if not np.isfinite(v):
                raise ValidationError(
                    f"{path}: non-finite value at row {r}, column {c}"
                )
        rows.append(row)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def load_motion_csv(path) -> MotionSequence:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    rate, channels = _parse_header(path, lines)
    data = _parse_rows(path, lines[2:], channels.n_channels)
    return MotionSequence(channels, data, rate)


def load_torque_csv(path) -> TorqueSequence:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    rate, channels = _parse_header(path, lines)
    data = _parse_rows(path, lines[2:], channels.n_channels)
    return TorqueSequence(channels, data, rate)


def _kind_suffix(kind: str) -> str:
    for suffix, k in _SUFFIX_TO_KIND.items():
        if k == kind:
            return suffix
    raise ValidationError(f"unknown channel kind {kind!r}")


def _write_csv(seq, path) -> None:
    buf = io.StringIO()
    buf.write(f"# frame_rate={seq.frame_rate!r}\n")
    header = ",".join(
        f"{n}:{_kind_suffix(k)}" for n, k in zip(seq.channels.names, seq.channels.kinds)
    )
    buf.write(header + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in seq.data:
        # repr round-trips float64 exactly, satisfying the >=9 significant
        # digit precision requirement with margin
        writer.writerow([repr(float(v)) for v in row])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def save_motion_csv(seq: MotionSequence, path) -> None:
    _write_csv(seq, path)


def save_torque_csv(seq: TorqueSequence, path) -> None:
    _write_csv(seq, path)


# ---------------------------------------------------------------------------
# Stance segmentation
# ---------------------------------------------------------------------------


def segment_stances(
    seq: MotionSequence,
    method: str = "threshold",
    *,
    boundaries=None,
    channel: str | None = None,
    threshold: float = 0.0,
    min_stance_frames: int = 4,
    hysteresis: int = 2,
) -> StanceSegmentation:
    """Split a sequence into stance phases.

    ``method="provided"`` trusts the caller's boundary list (stance starts,
    first must be 0).  ``method="threshold"`` detects rising-edge crossings
    of ``threshold`` on the designated contact ``channel``: frame ``i``
    starts a stance when the signal reaches the threshold after having been
    below it for at least ``hysteresis`` consecutive frames.
    """
    if method == "provided":
        if boundaries is None:
            raise ConfigError("method='provided' requires a boundary list")
        seg = StanceSegmentation(tuple(boundaries), seq.n_frames)
    elif method == "threshold":
        if channel is None:
            raise ConfigError("method='threshold' requires a contact channel name")
        x = seq.data[:, seq.channels.index_of(channel)]
        edges = [0]
        for i in range(1, seq.n_frames):
            lo = max(0, i - hysteresis)
            if x[i] >= threshold and i - lo >= 1 and np.all(x[lo:i] < threshold):
                if i > 0:
                    edges.append(i)
        edges = sorted(set(edges))
        if len(edges) < 2:
            raise ValidationError("no boundary found on contact channel")
        seg = StanceSegmentation(tuple(edges), seq.n_frames)
    else:
        raise ConfigError(f"unknown segmentation method {method!r}")

    short = [d for d in seg.durations if d < min_stance_frames]
    if short:
        raise ValidationError(
            f"stance of {short[0]} frames below minimum {min_stance_frames}"
        )
    return seg
