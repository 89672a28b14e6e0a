"""Streaming feature extraction for grasp classification.

The feature of interest is the per-taxel moving variance of the normalized
pressure signal: the 24x16xt recording is flattened to a 384xt matrix, each
row is smoothed with a short moving average, and a windowed population
variance is computed per element.  Per-finger reductions (max variance,
onset time) feed the rule estimator.

Window semantics: at stream start, windows shorter than the configured
length use all available samples instead of emitting nothing, so features
exist from the first frame.  Batch and streaming paths compute variances
with the same two-pass scheme over identical windows, which keeps them
within 1e-9 of a brute-force recomputation even on long streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import (
    DEFAULT_FRAME_INTERVAL_MS,
    DEFAULT_LAYOUT,
    FRAME_COLS,
    FRAME_ROWS,
    FingerLayout,
    GraspRecording,
    TaxelFrame,
)


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable pipeline parameters.

    ``smoothing_window`` is the moving-average length in frames,
    ``variance_window`` the moving-variance length.  ``onset_threshold`` is
    the variance level above which a finger counts as "in contact"; the
    shipped default comes from estimator calibration on the default
    benchmark.
    """

    smoothing_window: int = 4
    variance_window: int = 8
    onset_threshold: float = 1e-3
    frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS

    def __post_init__(self) -> None:
        if self.smoothing_window < 1:
            raise ValueError("smoothing_window must be >= 1")
        if self.variance_window < 2:
            raise ValueError("variance_window must be >= 2")
        if self.onset_threshold <= 0:
            raise ValueError("onset_threshold must be > 0")
        if self.frame_interval_ms <= 0:
            raise ValueError("frame_interval_ms must be > 0")


def reshape_stream(frames: Sequence[TaxelFrame] | np.ndarray) -> np.ndarray:
    """Flatten a frame sequence into a 384xt float64 matrix.

    Row r of the result is taxel (r // 16, r % 16) of the frame grid, i.e.
    row-major flattening, so finger f occupies the rows given by
    ``FingerLayout.taxel_indices(f)``.  Column t is frame t.
    """
    if isinstance(frames, np.ndarray):
        stack = np.asarray(frames, dtype=np.float64)
        if stack.ndim != 3 or stack.shape[1:] != (FRAME_ROWS, FRAME_COLS):
            raise ValueError(f"expected (t, {FRAME_ROWS}, {FRAME_COLS}) values, got {stack.shape}")
    else:
        frames = list(frames)
        if not frames:
            raise ValueError("cannot reshape an empty frame sequence")
        stack = np.stack([np.asarray(f.values, dtype=np.float64) for f in frames])
    if stack.shape[0] == 0:
        raise ValueError("cannot reshape an empty frame sequence")
    return stack.reshape(stack.shape[0], FRAME_ROWS * FRAME_COLS).T


def unreshape_stream(matrix: np.ndarray) -> np.ndarray:
    """Inverse of :func:`reshape_stream`: 384xt back to (t, 24, 16)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != FRAME_ROWS * FRAME_COLS:
        raise ValueError(f"expected a {FRAME_ROWS * FRAME_COLS}xt matrix, got {matrix.shape}")
    return matrix.T.reshape(matrix.shape[1], FRAME_ROWS, FRAME_COLS)


def _windowed(series: np.ndarray, window: int, reducer) -> np.ndarray:
    """Apply ``reducer`` over trailing windows, available-prefix at the start."""
    n = series.shape[-1]
    if n == 0:
        return np.zeros_like(series)
    prefix_len = min(window - 1, n)
    prefix = [reducer(series[..., : k + 1]) for k in range(prefix_len)]
    parts = [np.stack(prefix, axis=-1)] if prefix else []
    if n >= window:
        windows = sliding_window_view(series, window, axis=-1)
        parts.append(reducer(windows))
    return np.concatenate(parts, axis=-1) if len(parts) > 1 else parts[0]


def moving_average(series: Sequence[float] | np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average; output[t] = mean(series[t-w+1 .. t]).

    Works on 1-D series and on matrices (windows run along the last axis).
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    series = np.asarray(series, dtype=np.float64)
    return _windowed(series, window, lambda w: np.mean(w, axis=-1))


def moving_variance(series: Sequence[float] | np.ndarray, window: int) -> np.ndarray:
    """Trailing windowed population variance (divisor = window length).

    output[t] = mean((v - mean(v))^2) over the ``window`` most recent values;
    shorter prefixes use all available samples.  Computed with the two-pass
    scheme per window, so no catastrophic cancellation for offset data.
    """
    if window < 2:
        raise ValueError("variance window must be >= 2")
    series = np.asarray(series, dtype=np.float64)
    return _windowed(series, window, lambda w: np.var(w, axis=-1))


def per_finger_max_variance(variance: np.ndarray,
                            layout: FingerLayout = DEFAULT_LAYOUT,
                            phase_range: Optional[tuple[int, int]] = None) -> np.ndarray:
    """Max variance per finger over its 96 taxel rows and the phase columns.

    ``phase_range`` is a half-open [start, end) column span; None means the
    whole stream.
    """
    variance = np.asarray(variance)
    t = variance.shape[1]
    start, end = phase_range if phase_range is not None else (0, t)
    if not (0 <= start < end <= t):
        raise ValueError(f"empty or out-of-range phase span [{start}, {end}) for t={t}")
    return np.array([
        variance[layout.taxel_indices(f), start:end].max()
        for f in range(layout.finger_count)
    ])


def finger_max_series(variance: np.ndarray,
                      layout: FingerLayout = DEFAULT_LAYOUT) -> np.ndarray:
    """Per-frame max variance of each finger: a (fingers, t) matrix."""
    variance = np.asarray(variance)
    return np.stack([
        variance[layout.taxel_indices(f), :].max(axis=0)
        for f in range(layout.finger_count)
    ])


def onset_time(series: Sequence[float] | np.ndarray, threshold: float,
               span: Optional[tuple[int, int]] = None) -> Optional[int]:
    """First frame index at which ``series`` exceeds ``threshold``.

    Returns None when the series never crosses.  ``span`` restricts the
    search to a half-open frame range; the returned index stays absolute.
    """
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    series = np.asarray(series, dtype=np.float64)
    start, end = span if span is not None else (0, series.shape[0])
    above = np.nonzero(series[start:end] > threshold)[0]
    if above.size == 0:
        return None
    return int(above[0]) + start


def power_spectrum(series: Sequence[float] | np.ndarray,
                   frame_interval_ms: int = DEFAULT_FRAME_INTERVAL_MS
                   ) -> tuple[np.ndarray, np.ndarray]:
    """One-sided power spectrum of the mean-removed series.

    Returns (frequencies in Hz, power per bin).  Power is normalized so that
    the spectral sum equals the time-domain energy of the mean-removed
    series (Parseval), which the tests check directly.
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.shape[0]
    if n < 2:
        raise ValueError("power spectrum needs at least 2 samples")
    centered = series - series.mean()
    spectrum = np.fft.rfft(centered)
    power = np.abs(spectrum) ** 2 / n
    # Fold the negative-frequency half into the positive bins; DC and (for
    # even n) the Nyquist bin have no mirror.
    if n % 2 == 0:
        power[1:-1] *= 2.0
    else:
        power[1:] *= 2.0
    freqs = np.fft.rfftfreq(n, d=frame_interval_ms / 1000.0)
    return freqs, power


@dataclass(frozen=True)
class PipelineFeatures:
    """Feature snapshot for one recording (or one live stream so far).

    ``variance`` is the full 384xt moving-variance matrix, ``finger_series``
    its per-finger row maxima over time, ``per_finger_max`` the per-finger
    peak over the analysis span, and ``onset_times`` the first crossing of
    the configured onset threshold within the span (absolute frame index,
    None if never).  ``span`` is the half-open frame range analyzed.
    """

    variance: np.ndarray
    finger_series: np.ndarray
    per_finger_max: np.ndarray
    onset_times: tuple[Optional[int], ...]
    span: tuple[int, int]
    config: PipelineConfig = field(default_factory=PipelineConfig)

    @property
    def frame_count(self) -> int:
        return int(self.variance.shape[1])

    def table(self) -> str:
        """Tabular text dump (sidecar/debugging): frame, per-finger variance."""
        lines = ["frame\t" + "\t".join(f"finger{f}" for f in range(self.finger_series.shape[0]))]
        for t in range(self.frame_count):
            cells = "\t".join(f"{v:.6e}" for v in self.finger_series[:, t])
            lines.append(f"{t}\t{cells}")
        return "\n".join(lines)


def compute_features(recording: GraspRecording,
                     config: PipelineConfig = PipelineConfig(),
                     layout: FingerLayout = DEFAULT_LAYOUT) -> PipelineFeatures:
    """Run the batch pipeline over a whole recording."""
    if len(recording) == 0:
        raise ValueError("recording has no frames")
    matrix = reshape_stream(recording.values())
    smoothed = moving_average(matrix, config.smoothing_window)
    variance = moving_variance(smoothed, config.variance_window)
    span = recording.active_span()
    series = finger_max_series(variance, layout)
    per_finger = per_finger_max_variance(variance, layout, span)
    onsets = tuple(
        onset_time(series[f], config.onset_threshold, span)
        for f in range(layout.finger_count)
    )
    return PipelineFeatures(
        variance=variance,
        finger_series=series,
        per_finger_max=per_finger,
        onset_times=onsets,
        span=span,
        config=config,
    )


class GraspPipeline:
    """Single-owner streaming accumulator: one frame in, updated features out.

    Feeding the frames of a recording one by one produces the same variance
    stream as :func:`compute_features`; ring buffers are kept in
    chronological order so each window sees the exact sample sequence the
    batch path sees.
    """

    def __init__(self, config: PipelineConfig = PipelineConfig(),
                 layout: FingerLayout = DEFAULT_LAYOUT,
                 keep_variance: bool = False):
        self.config = config
        self.layout = layout
        self._raw: list[np.ndarray] = []
        self._smoothed: list[np.ndarray] = []
        self._finger_columns: list[np.ndarray] = []
        self._variance_columns: list[np.ndarray] = [] if keep_variance else None
        self._keep_variance = keep_variance
        self._finger_rows = [layout.taxel_indices(f) for f in range(layout.finger_count)]

    @property
    def frame_count(self) -> int:
        return len(self._finger_columns)

    def push(self, frame: TaxelFrame | np.ndarray) -> np.ndarray:
        """Consume one frame; returns the per-finger variance for this frame."""
        values = frame.values if isinstance(frame, TaxelFrame) else np.asarray(frame)
        if values.shape != (FRAME_ROWS, FRAME_COLS):
            raise ValueError(f"expected a {FRAME_ROWS}x{FRAME_COLS} frame, got {values.shape}")
        flat = values.reshape(-1).astype(np.float64)

        self._raw.append(flat)
        if len(self._raw) > self.config.smoothing_window:
            self._raw.pop(0)
        smoothed = np.mean(np.stack(self._raw, axis=-1), axis=-1)

        self._smoothed.append(smoothed)
        if len(self._smoothed) > self.config.variance_window:
            self._smoothed.pop(0)
        variance = np.var(np.stack(self._smoothed, axis=-1), axis=-1)

        if self._keep_variance:
            self._variance_columns.append(variance)
        finger = np.array([variance[rows].max() for rows in self._finger_rows])
        self._finger_columns.append(finger)
        return finger

    def finger_series(self) -> np.ndarray:
        """Per-finger max-variance series accumulated so far, shape (fingers, t)."""
        if not self._finger_columns:
            return np.zeros((self.layout.finger_count, 0))
        return np.stack(self._finger_columns, axis=-1)

    def variance_matrix(self) -> np.ndarray:
        if not self._keep_variance:
            raise ValueError("pipeline was created with keep_variance=False")
        if not self._variance_columns:
            return np.zeros((FRAME_ROWS * FRAME_COLS, 0))
        return np.stack(self._variance_columns, axis=-1)

    def features(self, span: Optional[tuple[int, int]] = None) -> PipelineFeatures:
        """Snapshot features over ``span`` (default: everything seen so far)."""
        if not self._finger_columns:
            raise ValueError("no frames pushed yet")
        series = self.finger_series()
        t = series.shape[1]
        span = span if span is not None else (0, t)
        start, end = span
        if not (0 <= start < end <= t):
            raise ValueError(f"empty or out-of-range span [{start}, {end}) for t={t}")
        variance = self.variance_matrix() if self._keep_variance else np.zeros((0, t))
        per_finger = series[:, start:end].max(axis=1)
        onsets = tuple(
            onset_time(series[f], self.config.onset_threshold, span)
            for f in range(self.layout.finger_count)
        )
        return PipelineFeatures(
            variance=variance,
            finger_series=series,
            per_finger_max=per_finger,
            onset_times=onsets,
            span=span,
            config=self.config,
        )
