"""Stance-phase time normalization and retiming.

Every stance is stretched onto a fixed grid of ``n_norm`` frames (default
300) by an interpolation that keeps all original frames: original frame
``i`` of a ``d``-frame stance lands on normalized index
``round(i * (n_norm-1) / (d-1))`` and inserted frames interpolate linearly
between their bracketing originals.  The mapping is recorded per stance so
the original timing, or any other tempo profile, can be reconstructed from
the normalized domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, ValidationError
from .motion import StanceSegmentation

DEFAULT_N_NORM = 300


@dataclass(frozen=True)
class TempoProfile:
    """Per-stance frame counts describing a (possibly irregular) gait tempo."""

    durations: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(x) for x in self.durations)
        object.__setattr__(self, "durations", d)
        if not d:
            raise ValidationError("tempo profile needs at least one stance")
        if any(x < 2 for x in d):
            raise ConfigError("tempo durations must be >= 2 frames")

    @property
    def n_stances(self) -> int:
        return len(self.durations)


@dataclass(frozen=True)
class FrameMap:
    """Injective order-preserving map from original to normalized frames,
    stored per stance as (original_local_index, normalized_local_index)."""

    n_norm: int
    stances: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "stances",
            tuple(tuple((int(i), int(k)) for i, k in st) for st in self.stances),
        )
        for st in self.stances:
            ks = [k for _, k in st]
            if st[0] != (0, 0) or st[-1][1] != self.n_norm - 1:
                raise ValidationError("frame map must anchor stance endpoints")
            if any(b <= a for a, b in zip(ks, ks[1:])):
                raise ValidationError("frame map indices must strictly increase")

    @property
    def n_stances(self) -> int:
        return len(self.stances)

    def durations(self) -> tuple[int, ...]:
        return tuple(len(st) for st in self.stances)

    def to_json(self) -> str:
        return json.dumps(
            {"n_norm": self.n_norm, "stances": [[list(p) for p in st] for st in self.stances]}
        )

    @classmethod
    def from_json(cls, text: str) -> "FrameMap":
        obj = json.loads(text)
        return cls(obj["n_norm"], tuple(tuple(tuple(p) for p in st) for st in obj["stances"]))


def _target_indices(duration: int, n_norm: int) -> list[int]:
    if duration < 2:
        raise ValidationError("cannot normalize a stance shorter than 2 frames")
    if duration > n_norm:
        raise ValidationError(
            f"stance of {duration} frames exceeds normalized length {n_norm}"
        )
    r = (n_norm - 1) / (duration - 1)
    ks: list[int] = []
    prev = -1
    for i in range(duration):
        k = int(round(i * r))
        if k <= prev:  # collision safeguard: shift forward by one
            k = prev + 1
        ks.append(k)
        prev = k
    assert ks[-1] == n_norm - 1
    return ks


def _interp_columns(positions: np.ndarray, nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.empty((positions.size, values.shape[1]))
    for c in range(values.shape[1]):
        out[:, c] = np.interp(positions, nodes, values[:, c])
    return out


def encode_normalize(seq, seg: StanceSegmentation, n_norm: int = DEFAULT_N_NORM):
    """Stretch each stance of ``seq`` to ``n_norm`` frames.

    Returns the normalized sequence (same type as ``seq``) and the
    ``FrameMap`` that inverts the encoding.  Original frames are copied
    bit-exactly onto their normalized slots.
    """
    if n_norm < 2:
        raise ConfigError("n_norm must be >= 2")
    if seg.n_frames != seq.n_frames:
        raise ShapeError("segmentation does not match sequence length")
    blocks = []
    stance_maps = []
    for start, dur in zip(seg.boundaries, seg.durations):
        x = seq.data[start : start + dur]
        ks = _target_indices(dur, n_norm)
        nodes = np.array(ks, dtype=np.float64)
        block = _interp_columns(np.arange(n_norm, dtype=np.float64), nodes, x)
        block[ks] = x  # exact preservation, immune to interpolation rounding
        blocks.append(block)
        stance_maps.append(tuple((i, k) for i, k in enumerate(ks)))
    norm = seq.with_data(np.vstack(blocks))
    return norm, FrameMap(n_norm, tuple(stance_maps))


def decode_with_map(norm_seq, fmap: FrameMap):
    """Pick the mapped frames back out of the normalized domain, restoring
    the per-stance durations recorded in ``fmap``."""
    expected = fmap.n_stances * fmap.n_norm
    if norm_seq.n_frames != expected:
        raise ShapeError(
            f"normalized sequence has {norm_seq.n_frames} frames, map expects {expected}"
        )
    rows = []
    for s, st in enumerate(fmap.stances):
        base = s * fmap.n_norm
        idx = [base + k for _, k in st]
        rows.append(norm_seq.data[idx])
    return norm_seq.with_data(np.vstack(rows))


def retime(
    norm_seq,
    tempo: TempoProfile,
    method: str = "uniform_resample",
    n_norm: int = DEFAULT_N_NORM,
):
    """Resample each normalized stance to the frame count given by ``tempo``,
    at uniform normalized-phase positions."""
    if method != "uniform_resample":
        raise ConfigError(f"unknown retime method {method!r}")
    if norm_seq.n_frames != tempo.n_stances * n_norm:
        raise ShapeError(
            f"tempo profile with {tempo.n_stances} stances does not match "
            f"{norm_seq.n_frames} normalized frames at n_norm={n_norm}"
        )
    nodes = np.arange(n_norm, dtype=np.float64)
    blocks = []
    for s, dur in enumerate(tempo.durations):
        block = norm_seq.data[s * n_norm : (s + 1) * n_norm]
        positions = np.linspace(0.0, n_norm - 1, dur)
        blocks.append(_interp_columns(positions, nodes, block))
    return norm_seq.with_data(np.vstack(blocks))


def sample_stance_positions(norm_seq, n_norm: int, positions_per_stance) -> np.ndarray:
    """Sample the normalized sequence at arbitrary per-stance positions
    (fractional indices in [0, n_norm-1]).  Shared kernel behind retiming;
    integer positions reproduce the stored frames up to float rounding."""
    if norm_seq.n_frames % n_norm != 0:
        raise ShapeError("sequence length is not a multiple of n_norm")
    nodes = np.arange(n_norm, dtype=np.float64)
    blocks = []
    for s, positions in enumerate(positions_per_stance):
        block = norm_seq.data[s * n_norm : (s + 1) * n_norm]
        blocks.append(_interp_columns(np.asarray(positions, dtype=np.float64), nodes, block))
    return np.vstack(blocks)


def extract_tempo_profile(seg: StanceSegmentation) -> TempoProfile:
    return TempoProfile(seg.durations)
