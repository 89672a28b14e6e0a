"""Domain types for the 4-finger tactile gripper.

A sensor frame is a 24x16 grid of normalized taxel pressures: each finger
carries 6 piezoresistive 4x4 arrays stacked along its length, and the four
fingers sit side by side, so finger ``f`` owns columns ``4f..4f+3`` of the
frame.  All downstream processing (pipeline, estimator, simulator, dataset
files) shares the types defined here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import CalibrationError

# Grid constants.  24 rows = 6 arrays x 4 taxel rows along the finger,
# 16 columns = 4 fingers x 4 taxel columns.
FRAME_ROWS = 24
FRAME_COLS = 16
TAXEL_COUNT = FRAME_ROWS * FRAME_COLS

#: Nominal sensor frame spacing.
DEFAULT_FRAME_INTERVAL_MS = 60

#: Detectable force band of a single taxel, in newtons.  Normalized value
#: 1.0 corresponds to the 20 N ceiling.
TAXEL_FORCE_MIN_N = 0.2
TAXEL_FORCE_MAX_N = 20.0

PHASES = ("approach", "grasp", "hold", "release")


@dataclass(frozen=True)
class FingerLayout:
    """Maps fingers to regions of the 24x16 frame.

    The default layout is the only one consistent with the hardware: four
    fingers, six 4x4 arrays per finger, fingers side by side along the
    column axis.
    """

    finger_count: int = 4
    arrays_per_finger: int = 6
    array_rows: int = 4
    array_cols: int = 4

    def __post_init__(self) -> None:
        if self.rows != FRAME_ROWS or self.cols != FRAME_COLS:
            raise ValueError(
                f"layout {self.rows}x{self.cols} does not tile the "
                f"{FRAME_ROWS}x{FRAME_COLS} frame"
            )

    @property
    def rows(self) -> int:
        return self.arrays_per_finger * self.array_rows

    @property
    def cols(self) -> int:
        return self.finger_count * self.array_cols

    def column_span(self, finger: int) -> tuple[int, int]:
        """Inclusive column range (first, last) owned by ``finger``."""
        self._check_finger(finger)
        first = finger * self.array_cols
        return first, first + self.array_cols - 1

    def taxel_indices(self, finger: int) -> np.ndarray:
        """Row indices of ``finger``'s 96 taxels in the flattened 384-row stream.

        Flattening is row-major over the 24x16 frame, matching both
        :func:`tactile_grasp.pipeline.reshape_stream` and the on-disk payload
        order.
        """
        first, last = self.column_span(finger)
        rows = np.arange(self.rows)[:, None] * self.cols
        cols = np.arange(first, last + 1)[None, :]
        return (rows + cols).ravel()

    def _check_finger(self, finger: int) -> None:
        if not 0 <= finger < self.finger_count:
            raise ValueError(f"finger must be in 0..{self.finger_count - 1}, got {finger}")


DEFAULT_LAYOUT = FingerLayout()


class GraspKind(enum.Enum):
    """The four grasp outcomes distinguished during a picking cycle."""

    NULL = "null"
    GOOD = "good"
    BRANCH_INTERFERENCE = "branch"
    OBSTRUCTED = "obstructed"


_FINGERED_KINDS = (GraspKind.BRANCH_INTERFERENCE, GraspKind.OBSTRUCTED)


@dataclass(frozen=True)
class GraspState:
    """Classification result: a grasp kind plus a finger index where applicable.

    ``finger`` is present exactly for branch-interference (which finger has
    the branch) and obstructed (which finger was stopped early) states, and
    is 0-based.
    """

    kind: GraspKind
    finger: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind in _FINGERED_KINDS:
            if self.finger is None:
                raise ValueError(f"{self.kind.value} state requires a finger index")
            if not 0 <= self.finger < DEFAULT_LAYOUT.finger_count:
                raise ValueError(f"finger index out of range: {self.finger}")
        elif self.finger is not None:
            raise ValueError(f"{self.kind.value} state carries no finger index")

    @classmethod
    def null(cls) -> "GraspState":
        return cls(GraspKind.NULL)

    @classmethod
    def good(cls) -> "GraspState":
        return cls(GraspKind.GOOD)

    @classmethod
    def branch_interference(cls, finger: int) -> "GraspState":
        return cls(GraspKind.BRANCH_INTERFERENCE, finger)

    @classmethod
    def obstructed(cls, finger: int) -> "GraspState":
        return cls(GraspKind.OBSTRUCTED, finger)

    def to_token(self) -> str:
        """Wire form used in dataset manifests and predictions files."""
        if self.finger is not None:
            return f"{self.kind.value} {self.finger}"
        return self.kind.value

    @classmethod
    def from_token(cls, token: str) -> "GraspState":
        parts = token.split()
        if not parts:
            raise ValueError("empty grasp-state token")
        try:
            kind = GraspKind(parts[0])
        except ValueError:
            raise ValueError(f"unknown grasp state {parts[0]!r}") from None
        if kind in _FINGERED_KINDS:
            if len(parts) != 2:
                raise ValueError(f"state {parts[0]!r} requires a finger index")
            return cls(kind, int(parts[1]))
        if len(parts) != 1:
            raise ValueError(f"state {parts[0]!r} carries no finger index")
        return cls(kind)

    def __str__(self) -> str:
        return self.to_token()


@dataclass(frozen=True)
class TaxelFrame:
    """One 24x16 snapshot of normalized taxel pressures.

    ``values`` is float32, read-only, every entry in [0, 1].  ``timestamp_ms``
    counts from the start of the recording.
    """

    timestamp_ms: int
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float32)
        if values.shape != (FRAME_ROWS, FRAME_COLS):
            raise ValueError(
                f"frame must be {FRAME_ROWS}x{FRAME_COLS}, got {values.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("frame contains non-finite values")
        lo, hi = float(values.min()), float(values.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"frame values outside [0, 1]: min={lo}, max={hi}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamp_ms", int(self.timestamp_ms))


def finger_slice(frame: TaxelFrame | np.ndarray, finger: int,
                 layout: FingerLayout = DEFAULT_LAYOUT) -> np.ndarray:
    """Columns of the frame belonging to one finger, as a 24x4 array.

    Concatenating the four slices along the column axis reconstructs the
    frame exactly.
    """
    values = frame.values if isinstance(frame, TaxelFrame) else np.asarray(frame)
    if values.shape != (layout.rows, layout.cols):
        raise ValueError(f"expected a {layout.rows}x{layout.cols} frame, got {values.shape}")
    first, last = layout.column_span(finger)
    return values[:, first:last + 1]


@dataclass(frozen=True)
class CalibrationProfile:
    """Raw-reading calibration used to normalize sensor output.

    ``baseline`` holds per-taxel rest readings; ``full_scale`` is the raw
    reading corresponding to the 20 N taxel ceiling.  ``mode`` selects
    per-taxel baseline subtraction (default) or a single global baseline
    (the mean rest reading), kept as an option because either reading of
    "data normalization" is defensible.
    """

    baseline: np.ndarray
    full_scale: float
    mode: str = "per_taxel"

    def __post_init__(self) -> None:
        baseline = np.asarray(self.baseline, dtype=np.float64)
        if baseline.shape != (FRAME_ROWS, FRAME_COLS):
            raise ValueError(
                f"baseline must be {FRAME_ROWS}x{FRAME_COLS}, got {baseline.shape}"
            )
        if self.mode not in ("per_taxel", "global"):
            raise ValueError(f"unknown normalization mode {self.mode!r}")
        full_scale = float(self.full_scale)
        if not full_scale > float(baseline.max()):
            raise CalibrationError(
                "full_scale must exceed every baseline entry "
                f"(full_scale={full_scale}, max baseline={float(baseline.max())})"
            )
        baseline = baseline.copy()
        baseline.flags.writeable = False
        object.__setattr__(self, "baseline", baseline)
        object.__setattr__(self, "full_scale", full_scale)

    @classmethod
    def identity(cls) -> "CalibrationProfile":
        """Profile under which already-normalized data passes through unchanged."""
        return cls(baseline=np.zeros((FRAME_ROWS, FRAME_COLS)), full_scale=1.0)

    def effective_baseline(self) -> np.ndarray:
        if self.mode == "global":
            return np.full((FRAME_ROWS, FRAME_COLS), float(self.baseline.mean()))
        return self.baseline


def normalize_frame(raw: np.ndarray, cal: CalibrationProfile,
                    timestamp_ms: int = 0) -> TaxelFrame:
    """Affine min-max normalization of a raw 24x16 reading, clamped to [0, 1].

    value = clamp((raw - baseline) / (full_scale - baseline), 0, 1), with the
    baseline taken per taxel or globally depending on the profile mode.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (FRAME_ROWS, FRAME_COLS):
        raise ValueError(f"raw frame must be {FRAME_ROWS}x{FRAME_COLS}, got {raw.shape}")
    baseline = cal.effective_baseline()
    span = cal.full_scale - baseline
    normalized = np.clip((raw - baseline) / span, 0.0, 1.0)
    return TaxelFrame(timestamp_ms=timestamp_ms, values=normalized)


@dataclass(frozen=True)
class GraspRecording:
    """A time-ordered frame sequence for one grasp attempt.

    ``phase_marks`` maps phase names (approach, grasp, hold, release) to the
    frame index where the phase starts; marks must be nondecreasing in that
    order.  ``label`` is the ground-truth grasp state when known, ``meta``
    carries free-form scenario parameters as text.
    """

    frames: tuple[TaxelFrame, ...]
    phase_marks: Mapping[str, int] = field(default_factory=dict)
    label: Optional[GraspState] = None
    meta: Mapping[str, str] = field(default_factory=dict)
    recording_id: Optional[str] = None

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        if not all(isinstance(f, TaxelFrame) for f in frames):
            raise ValueError("frames must be TaxelFrame instances")
        stamps = [f.timestamp_ms for f in frames]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("frame timestamps must be strictly increasing")
        marks = dict(self.phase_marks)
        unknown = set(marks) - set(PHASES)
        if unknown:
            raise ValueError(f"unknown phase names: {sorted(unknown)}")
        previous = 0
        for phase in PHASES:
            if phase not in marks:
                continue
            idx = int(marks[phase])
            if idx < 0 or (frames and idx >= len(frames)) or (not frames and idx != 0):
                raise ValueError(f"phase {phase!r} index {idx} outside recording")
            if idx < previous:
                raise ValueError("phase marks must be nondecreasing in cycle order")
            marks[phase] = idx
            previous = idx
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "phase_marks", marks)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return len(self.frames)

    def values(self) -> np.ndarray:
        """Frame values stacked into a (t, 24, 16) float32 array."""
        if not self.frames:
            return np.zeros((0, FRAME_ROWS, FRAME_COLS), dtype=np.float32)
        return np.stack([f.values for f in self.frames])

    def timestamps_ms(self) -> list[int]:
        return [f.timestamp_ms for f in self.frames]

    def active_span(self) -> tuple[int, int]:
        """Frame span [start, end) covering approach through hold.

        The release phase is excluded: finger opening produces large pressure
        transients in every scenario and carries no grasp-state information.
        Falls back to the full recording when marks are absent.
        """
        start = int(self.phase_marks.get("approach", 0))
        end = int(self.phase_marks.get("release", len(self.frames)))
        return start, max(end, start)


def make_recording(values: Iterable[np.ndarray] | np.ndarray,
                   interval_ms: int = DEFAULT_FRAME_INTERVAL_MS,
                   phase_marks: Optional[Mapping[str, int]] = None,
                   label: Optional[GraspState] = None,
                   meta: Optional[Mapping[str, str]] = None,
                   recording_id: Optional[str] = None) -> GraspRecording:
    """Build a recording from already-normalized frame values at a fixed rate."""
    frames = tuple(
        TaxelFrame(timestamp_ms=i * interval_ms, values=v)
        for i, v in enumerate(values)
    )
    return GraspRecording(
        frames=frames,
        phase_marks=phase_marks or {},
        label=label,
        meta=meta or {},
        recording_id=recording_id,
    )
