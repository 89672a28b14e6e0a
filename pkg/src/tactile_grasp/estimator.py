"""Rule-based grasp-state estimator.

Decision procedure over the pipeline features, in fixed order:

1. every finger's peak moving variance below ``t_null``  -> null grasp;
2. contact onsets spread wider than ``dt_obstruct`` frames, or some finger
   never onsets while another does  -> obstructed (earliest-onset finger);
3. one finger's peak variance exceeds ``r_branch`` times the median of the
   other three  -> branch interference on that finger;
4. otherwise  -> good grasp.

The obstruction test runs before the branch test on purpose: a finger
stopped early also shows variance asymmetry, so the asynchrony signature
must win.  Thresholds are not hand-picked; :func:`calibrate` grid-searches
them on a labeled set and the shipped defaults come from the default
benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import GraspKind, GraspRecording, GraspState
from .errors import CalibrationError
from .pipeline import PipelineConfig, PipelineFeatures, compute_features, onset_time


@dataclass(frozen=True)
class EstimatorConfig:
    """Thresholds for the rule estimator.

    ``t_null``: peak-variance level below which a grasp is null.
    ``t_onset``: variance level a finger must exceed to count as contacting.
    ``dt_obstruct``: max tolerated onset spread between fingers, in frames.
    ``r_branch``: one finger's peak variance over the median of the others.

    Defaults were produced by ``calibrate`` on the seeded default benchmark
    (see ``simulator.DEFAULT_BENCHMARK_SEED``).
    """

    t_null: float = 1e-3
    t_onset: float = 1e-3
    dt_obstruct: int = 8
    r_branch: float = 3.5

    def __post_init__(self) -> None:
        if self.t_null <= 0 or self.t_onset <= 0 or self.r_branch <= 0:
            raise ValueError("estimator thresholds must be > 0")
        if self.dt_obstruct < 1:
            raise ValueError("dt_obstruct must be >= 1 frame")

    def scaled(self, c: float) -> "EstimatorConfig":
        """Config matching an input stream scaled by ``sqrt(c)`` in amplitude.

        Variances scale quadratically with amplitude, so the variance
        thresholds scale by ``c`` while the ratio and frame-spread thresholds
        are scale-free.
        """
        if c <= 0:
            raise ValueError("scale must be > 0")
        return replace(self, t_null=self.t_null * c, t_onset=self.t_onset * c)

    def to_text(self) -> str:
        return "\n".join([
            f"t_null {self.t_null!r}",
            f"t_onset {self.t_onset!r}",
            f"dt_obstruct {self.dt_obstruct}",
            f"r_branch {self.r_branch!r}",
        ])

    @classmethod
    def from_text(cls, text: str) -> "EstimatorConfig":
        fields = _parse_key_values(text)
        known = {"t_null", "t_onset", "dt_obstruct", "r_branch"}
        kwargs = {}
        for key in known & set(fields):
            value = fields[key]
            kwargs[key] = int(value) if key == "dt_obstruct" else float(value)
        return cls(**kwargs)


def _parse_key_values(text: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        fields[key] = value.strip()
    return fields


def config_to_text(pipeline: PipelineConfig, estimator: EstimatorConfig) -> str:
    """Flat key-value text carrying both configs (CLI/service exchange form)."""
    lines = [
        f"smoothing_window {pipeline.smoothing_window}",
        f"variance_window {pipeline.variance_window}",
        f"onset_threshold {pipeline.onset_threshold!r}",
        f"frame_interval_ms {pipeline.frame_interval_ms}",
        estimator.to_text(),
    ]
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> tuple[PipelineConfig, EstimatorConfig]:
    fields = _parse_key_values(text)
    pipeline_kwargs = {}
    for key in ("smoothing_window", "variance_window", "frame_interval_ms"):
        if key in fields:
            pipeline_kwargs[key] = int(fields[key])
    if "onset_threshold" in fields:
        pipeline_kwargs["onset_threshold"] = float(fields["onset_threshold"])
    return PipelineConfig(**pipeline_kwargs), EstimatorConfig.from_text(text)


def localize_branch_finger(per_finger_max: Sequence[float] | np.ndarray) -> int:
    """Index of the finger with the largest peak variance; ties -> lowest index."""
    values = np.asarray(per_finger_max, dtype=np.float64)
    if values.shape != (4,):
        raise ValueError(f"expected 4 per-finger values, got shape {values.shape}")
    if (values < 0).any():
        raise ValueError("per-finger variances must be non-negative")
    return int(np.argmax(values))


def _contact_onsets(features: PipelineFeatures, t_onset: float) -> list[Optional[int]]:
    return [
        onset_time(features.finger_series[f], t_onset, features.span)
        for f in range(features.finger_series.shape[0])
    ]


def classify(features: PipelineFeatures, cfg: EstimatorConfig = EstimatorConfig()) -> GraspState:
    """Map a feature snapshot to a grasp state (see module docstring)."""
    if features.frame_count == 0:
        raise ValueError("features cover zero frames")
    per_finger = np.asarray(features.per_finger_max, dtype=np.float64)

    if per_finger.max() < cfg.t_null:
        return GraspState.null()

    onsets = _contact_onsets(features, cfg.t_onset)
    with_onset = [f for f, onset in enumerate(onsets) if onset is not None]
    if with_onset:
        some_missing = len(with_onset) < len(onsets)
        spread = max(onsets[f] for f in with_onset) - min(onsets[f] for f in with_onset)
        if some_missing or spread > cfg.dt_obstruct:
            earliest = min(with_onset, key=lambda f: (onsets[f], f))
            return GraspState.obstructed(earliest)

    candidates = [
        f for f in range(per_finger.shape[0])
        if per_finger[f] > cfg.r_branch * np.median(np.delete(per_finger, f))
    ]
    if candidates:
        best = min(candidates, key=lambda f: (-per_finger[f], f))
        return GraspState.branch_interference(best)

    return GraspState.good()


@dataclass(frozen=True)
class CalibrationGrid:
    """Candidate thresholds swept by :func:`calibrate`."""

    t_null: tuple[float, ...] = tuple(np.logspace(-6.5, -0.5, 25))
    dt_obstruct: tuple[int, ...] = (2, 3, 4, 5, 6, 8, 10, 12, 16, 20)
    r_branch: tuple[float, ...] = (1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0)


def calibrate(labeled: Sequence[GraspRecording],
              pipeline_config: PipelineConfig = PipelineConfig(),
              grid: CalibrationGrid = CalibrationGrid()) -> EstimatorConfig:
    """Grid-search thresholds maximizing macro-averaged per-class accuracy.

    Branch predictions count as correct only when the finger index matches,
    mirroring the evaluation protocol.  ``t_onset`` is tied to ``t_null``:
    contact onset is defined as the first time a finger shows above-null
    variance.  Deterministic for a fixed grid and input order; the first
    combination reaching the best score wins.

    Raises CalibrationError when any of the four classes is absent.
    """
    labels = [rec.label for rec in labeled]
    if any(label is None for label in labels):
        raise CalibrationError("every calibration recording needs a label")
    present = {label.kind for label in labels}
    missing = [kind.value for kind in GraspKind if kind not in present]
    if missing:
        raise CalibrationError(f"calibration set lacks classes: {', '.join(missing)}")

    features = [compute_features(rec, pipeline_config) for rec in labeled]
    n = len(features)
    per_finger = np.stack([f.per_finger_max for f in features])  # (n, 4)
    peak = per_finger.max(axis=1)

    # Branch ratios and the candidate preference order are threshold-free.
    ratios = np.empty_like(per_finger)
    for f in range(4):
        others = np.delete(per_finger, f, axis=1)
        med = np.median(others, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios[:, f] = np.where(med > 0, per_finger[:, f] / med,
                                    np.where(per_finger[:, f] > 0, np.inf, 0.0))
    order = np.argsort(-per_finger, axis=1, kind="stable")

    label_kind = np.array([label.kind.value for label in labels])
    label_finger = np.array([-1 if label.finger is None else label.finger for label in labels])
    class_masks = {kind: label_kind == kind.value for kind in GraspKind}

    best: tuple[float, EstimatorConfig] | None = None
    for t_null in grid.t_null:
        null_mask = peak < t_null
        has_onset, some_missing, spread, _ = _onset_summary(features, t_null)
        for dt in grid.dt_obstruct:
            obstructed_mask = (~null_mask) & has_onset & (some_missing | (spread > dt))
            for r in grid.r_branch:
                cand = ratios > r
                cand_ord = np.take_along_axis(cand, order, axis=1)
                first = cand_ord.argmax(axis=1)
                any_cand = cand_ord.any(axis=1)
                branch_finger = np.take_along_axis(order, first[:, None], axis=1)[:, 0]
                branch_mask = (~null_mask) & (~obstructed_mask) & any_cand

                # Scoring mirrors the evaluation protocol: branch counts as
                # correct only with the right finger; the other classes are
                # judged on the state alone.
                correct = np.zeros(n, dtype=bool)
                correct |= null_mask & class_masks[GraspKind.NULL]
                correct |= obstructed_mask & class_masks[GraspKind.OBSTRUCTED]
                correct |= (branch_mask & class_masks[GraspKind.BRANCH_INTERFERENCE]
                            & (branch_finger == label_finger))
                good_mask = ~(null_mask | obstructed_mask | branch_mask)
                correct |= good_mask & class_masks[GraspKind.GOOD]

                score = float(np.mean([
                    correct[mask].mean() for mask in class_masks.values() if mask.any()
                ]))
                if best is None or score > best[0]:
                    best = (score, EstimatorConfig(
                        t_null=float(t_null), t_onset=float(t_null),
                        dt_obstruct=int(dt), r_branch=float(r),
                    ))
    assert best is not None
    return best[1]


def _onset_summary(features: Sequence[PipelineFeatures], threshold: float
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-recording onset statistics at a given onset threshold."""
    n = len(features)
    has_onset = np.zeros(n, dtype=bool)
    some_missing = np.zeros(n, dtype=bool)
    spread = np.zeros(n, dtype=np.int64)
    earliest = np.full(n, -1, dtype=np.int64)
    for i, feats in enumerate(features):
        onsets = _contact_onsets(feats, threshold)
        with_onset = [f for f, onset in enumerate(onsets) if onset is not None]
        if not with_onset:
            continue
        has_onset[i] = True
        some_missing[i] = len(with_onset) < len(onsets)
        values = [onsets[f] for f in with_onset]
        spread[i] = max(values) - min(values)
        earliest[i] = min(with_onset, key=lambda f: (onsets[f], f))
    return has_onset, some_missing, spread, earliest


def classify_recording(recording: GraspRecording,
                       pipeline_config: PipelineConfig = PipelineConfig(),
                       estimator_config: EstimatorConfig = EstimatorConfig()) -> GraspState:
    """Convenience: batch pipeline + rule estimator on one recording."""
    return classify(compute_features(recording, pipeline_config), estimator_config)
