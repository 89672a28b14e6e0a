"""Benchmark evaluation: confusion matrices and per-class accuracies.

Predictions come either from the built-in rule estimator or from an
external predictions file, the exchange format shared with any other
classifier implementation (one ``recording_id, predicted_state[, finger]``
line per recording; fingers are 0-based).  Per-class accuracies are
state-level (the confusion-matrix diagonal); ``localization_accuracy`` is
the strict branch number, counting a branch case as correct only when the
predicted finger matches, because locating the interfering finger is the
point of that class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import GraspKind, GraspRecording, GraspState
from .dataset import Dataset
from .errors import ReconciliationError
from .estimator import EstimatorConfig, classify
from .pipeline import PipelineConfig, compute_features

#: Fixed class order used for confusion-matrix axes.
CLASS_ORDER = (GraspKind.NULL, GraspKind.GOOD,
               GraspKind.BRANCH_INTERFERENCE, GraspKind.OBSTRUCTED)

#: Reference per-class accuracies of the conventional (rule-based) method on
#: the 200-grasp physical benchmark protocol; printed in report footers and
#: used as the benchmark floors.  Branch is finger-level localization.
CONVENTIONAL_REFERENCE = {
    GraspKind.NULL: 0.966,
    GraspKind.OBSTRUCTED: 0.885,
    GraspKind.GOOD: 0.521,
    GraspKind.BRANCH_INTERFERENCE: 0.750,
}


@dataclass
class EvaluationReport:
    """Deterministic evaluation result for one (dataset, predictions) pair."""

    confusion: np.ndarray                 # 4x4, rows = true class, cols = predicted
    finger_confusion: np.ndarray          # 4x4 over true-branch cases predicted branch
    per_class_accuracy: dict[GraspKind, float]
    per_class_counts: dict[GraspKind, int]
    localization_accuracy: float
    overall_accuracy: float
    dataset_digest: str
    recordings: int

    def to_text(self) -> str:
        """Machine-readable report, stable byte-for-byte across runs."""
        lines = ["evaluation v1",
                 f"dataset {self.dataset_digest}",
                 f"recordings {self.recordings}",
                 f"overall_accuracy {self.overall_accuracy:.6f}"]
        for kind in CLASS_ORDER:
            lines.append(
                f"class {kind.value} count {self.per_class_counts[kind]} "
                f"accuracy {self.per_class_accuracy[kind]:.6f}"
            )
        lines.append(f"localization_accuracy {self.localization_accuracy:.6f}")
        for i, true_kind in enumerate(CLASS_ORDER):
            for j, pred_kind in enumerate(CLASS_ORDER):
                count = int(self.confusion[i, j])
                if count:
                    lines.append(f"confusion {true_kind.value} {pred_kind.value} {count}")
        for i in range(4):
            for j in range(4):
                count = int(self.finger_confusion[i, j])
                if count:
                    lines.append(f"finger_confusion {i} {j} {count}")
        for kind in (GraspKind.NULL, GraspKind.OBSTRUCTED,
                     GraspKind.GOOD, GraspKind.BRANCH_INTERFERENCE):
            lines.append(
                f"reference conventional {kind.value} {CONVENTIONAL_REFERENCE[kind]:.3f}"
            )
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        """Human-readable summary."""
        header = f"{'class':<12}{'count':>7}{'accuracy':>10}{'reference':>11}"
        rows = [header, "-" * len(header)]
        for kind in CLASS_ORDER:
            rows.append(
                f"{kind.value:<12}{self.per_class_counts[kind]:>7}"
                f"{self.per_class_accuracy[kind]:>10.3f}"
                f"{CONVENTIONAL_REFERENCE[kind]:>11.3f}"
            )
        rows.append("-" * len(header))
        rows.append(f"{'overall':<12}{self.recordings:>7}{self.overall_accuracy:>10.3f}")
        rows.append(
            f"branch-finger localization: {self.localization_accuracy:.3f} "
            f"(reference {CONVENTIONAL_REFERENCE[GraspKind.BRANCH_INTERFERENCE]:.3f})"
        )
        rows.append("")
        rows.append("confusion (rows true, cols predicted):")
        names = [k.value for k in CLASS_ORDER]
        rows.append(" " * 12 + "".join(f"{n:>12}" for n in names))
        for i, name in enumerate(names):
            cells = "".join(f"{int(self.confusion[i, j]):>12}" for j in range(4))
            rows.append(f"{name:<12}{cells}")
        rows.append("reference values: conventional-method accuracies on the "
                    "200-grasp hardware protocol")
        return "\n".join(rows) + "\n"


def predictions_from_estimator(recordings: Sequence[GraspRecording],
                               pipeline_config: PipelineConfig = PipelineConfig(),
                               estimator_config: EstimatorConfig = EstimatorConfig()
                               ) -> dict[str, GraspState]:
    """Run the rule estimator over every recording, keyed by recording id."""
    out: dict[str, GraspState] = {}
    for rec in recordings:
        if rec.recording_id is None:
            raise ValueError("recordings must carry ids for evaluation")
        out[rec.recording_id] = classify(compute_features(rec, pipeline_config),
                                         estimator_config)
    return out


def write_predictions(predictions: Mapping[str, GraspState], path: str | Path) -> None:
    """Write the exchange file, ordered by recording id."""
    lines = []
    for rid in sorted(predictions):
        state = predictions[rid]
        if state.finger is not None:
            lines.append(f"{rid}, {state.kind.value}, {state.finger}")
        else:
            lines.append(f"{rid}, {state.kind.value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions(path: str | Path) -> dict[str, GraspState]:
    """Parse a predictions exchange file; blank lines and # comments allowed."""
    path = Path(path)
    out: dict[str, GraspState] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (2, 3) or not parts[0]:
            raise ReconciliationError(f"{path}:{lineno}: malformed prediction line {raw!r}")
        rid = parts[0]
        if rid in out:
            raise ReconciliationError(f"{path}:{lineno}: duplicate prediction for {rid!r}")
        token = parts[1] if len(parts) == 2 else f"{parts[1]} {parts[2]}"
        try:
            out[rid] = GraspState.from_token(token)
        except ValueError as exc:
            raise ReconciliationError(f"{path}:{lineno}: {exc}") from None
    return out


def evaluate(dataset: Dataset, predictions: Mapping[str, GraspState]) -> EvaluationReport:
    """Score predictions against dataset labels.

    Every labeled recording must have exactly one prediction; missing or
    extra ids raise ReconciliationError listing them.
    """
    labeled = {rec.recording_id: rec.label for rec in dataset.recordings}
    if any(label is None for label in labeled.values()):
        unlabeled = sorted(rid for rid, label in labeled.items() if label is None)
        raise ValueError(f"dataset has unlabeled recordings: {_preview(unlabeled)}")

    missing = sorted(set(labeled) - set(predictions))
    extra = sorted(set(predictions) - set(labeled))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing predictions for {_preview(missing)}")
        if extra:
            parts.append(f"extra prediction ids {_preview(extra)}")
        raise ReconciliationError("; ".join(parts))

    index = {kind: i for i, kind in enumerate(CLASS_ORDER)}
    confusion = np.zeros((4, 4), dtype=np.int64)
    finger_confusion = np.zeros((4, 4), dtype=np.int64)
    correct = {kind: 0 for kind in CLASS_ORDER}
    counts = {kind: 0 for kind in CLASS_ORDER}
    localized = 0
    overall_correct = 0

    for rid in sorted(labeled):
        truth = labeled[rid]
        pred = predictions[rid]
        counts[truth.kind] += 1
        confusion[index[truth.kind], index[pred.kind]] += 1
        state_match = pred.kind is truth.kind
        correct[truth.kind] += int(state_match)
        overall_correct += int(state_match)
        if truth.kind is GraspKind.BRANCH_INTERFERENCE and state_match:
            finger_confusion[truth.finger, pred.finger] += 1
            localized += int(pred.finger == truth.finger)

    accuracy = {
        kind: (correct[kind] / counts[kind]) if counts[kind] else 0.0
        for kind in CLASS_ORDER
    }
    branch_count = counts[GraspKind.BRANCH_INTERFERENCE]
    total = len(labeled)
    return EvaluationReport(
        confusion=confusion,
        finger_confusion=finger_confusion,
        per_class_accuracy=accuracy,
        per_class_counts=counts,
        localization_accuracy=(localized / branch_count) if branch_count else 0.0,
        overall_accuracy=(overall_correct / total) if total else 0.0,
        dataset_digest=f"crc32={dataset.payload_crc32} recordings={len(dataset.recordings)}",
        recordings=total,
    )


def _preview(ids: Sequence[str], limit: int = 8) -> str:
    shown = ", ".join(ids[:limit])
    if len(ids) > limit:
        shown += f", ... ({len(ids)} total)"
    return shown
