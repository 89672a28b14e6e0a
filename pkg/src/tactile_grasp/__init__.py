"""Tactile grasp-state perception for a 4-finger harvesting gripper.

Synthesizes labeled taxel-pressure recordings for four grasp scenarios,
classifies them with a moving-variance rule pipeline, and drives a gripper
reaction state machine.  A FastAPI service exposes the toolkit; the CLI is
a thin client of that service.
"""

__version__ = "0.1.0"

from .core import (
    CalibrationProfile,
    FingerLayout,
    GraspKind,
    GraspRecording,
    GraspState,
    TaxelFrame,
    finger_slice,
    make_recording,
    normalize_frame,
)
from .dataset import Dataset, load_dataset, read_dataset, write_dataset
from .errors import (
    CalibrationError,
    DatasetError,
    DatasetFormatError,
    DatasetIOError,
    ReconciliationError,
    TactileGraspError,
)
from .estimator import EstimatorConfig, calibrate, classify, localize_branch_finger
from .pipeline import (
    GraspPipeline,
    PipelineConfig,
    PipelineFeatures,
    compute_features,
    moving_average,
    moving_variance,
    onset_time,
    per_finger_max_variance,
    power_spectrum,
    reshape_stream,
    unreshape_stream,
)
from .simulator import (
    BenchmarkMix,
    OgdenParams,
    ScenarioSpec,
    generate_benchmark,
    generate_sweep,
    ogden_uniaxial_nominal_stress,
    synthesize_grasp,
)
from .controller import (
    Action,
    ActionKind,
    Classified,
    ControlPhase,
    ControllerConfig,
    ControllerState,
    CycleReport,
    PhaseComplete,
    Timeout,
    run_cycle,
    step,
)
from .evaluation import (
    EvaluationReport,
    evaluate,
    predictions_from_estimator,
    read_predictions,
    write_predictions,
)

__all__ = [name for name in dir() if not name.startswith("_")]
