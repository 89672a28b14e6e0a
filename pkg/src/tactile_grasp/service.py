"""HTTP service wrapping the perception toolkit.

Endpoints mirror the operator workflow: generate a dataset, calibrate the
estimator, classify or replay single recordings, evaluate predictions.
Dataset paths are resolved on the service host (the gripper's onboard
computer); payloads stay on disk and responses carry summaries.

Error categories map to one JSON shape: ``{"category": ..., "detail": ...}``
with category ``format`` (bad dataset files), ``calibration``,
``reconciliation`` (prediction/dataset id mismatches) or ``argument``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .controller import ControllerConfig, run_cycle
from .core import GraspState
from .dataset import Dataset, load_dataset, write_dataset
from .errors import CalibrationError, DatasetError, ReconciliationError
from .estimator import (
    EstimatorConfig,
    calibrate,
    classify,
    config_to_text,
)
from .evaluation import (
    CLASS_ORDER,
    EvaluationReport,
    evaluate,
    predictions_from_estimator,
    read_predictions,
)
from .pipeline import PipelineConfig, compute_features
from .simulator import (
    DEFAULT_BENCHMARK_NOISE_SD,
    DEFAULT_BENCHMARK_SEED,
    BenchmarkMix,
    benchmark_meta,
    generate_benchmark,
    generate_sweep,
)


class PipelineConfigModel(BaseModel):
    smoothing_window: int = 4
    variance_window: int = 8
    onset_threshold: float = PipelineConfig().onset_threshold
    frame_interval_ms: int = 60

    def to_domain(self) -> PipelineConfig:
        return PipelineConfig(**self.model_dump())


class EstimatorConfigModel(BaseModel):
    t_null: float = EstimatorConfig().t_null
    t_onset: float = EstimatorConfig().t_onset
    dt_obstruct: int = EstimatorConfig().dt_obstruct
    r_branch: float = EstimatorConfig().r_branch

    def to_domain(self) -> EstimatorConfig:
        return EstimatorConfig(**self.model_dump())

    @classmethod
    def from_domain(cls, cfg: EstimatorConfig) -> "EstimatorConfigModel":
        return cls(t_null=cfg.t_null, t_onset=cfg.t_onset,
                   dt_obstruct=cfg.dt_obstruct, r_branch=cfg.r_branch)


class ConfigModel(BaseModel):
    pipeline: PipelineConfigModel = Field(default_factory=PipelineConfigModel)
    estimator: EstimatorConfigModel = Field(default_factory=EstimatorConfigModel)


class HealthResponse(BaseModel):
    status: str
    version: str


class MixModel(BaseModel):
    null_without_leaves: int = 15
    null_with_leaves: int = 15
    obstructed: int = 26
    good: int = 48
    branch: int = 96

    def to_domain(self) -> BenchmarkMix:
        return BenchmarkMix(**self.model_dump())


class GenerateRequest(BaseModel):
    path: str
    kind: Literal["benchmark", "sweep"] = "benchmark"
    seed: int = DEFAULT_BENCHMARK_SEED
    noise_sd: Optional[float] = None
    mix: MixModel = Field(default_factory=MixModel)
    per_class: int = 10


class GenerateResponse(BaseModel):
    path: str
    recordings: int
    class_histogram: dict[str, int]
    payload_crc32: int


class CalibrateRequest(BaseModel):
    dataset: str
    pipeline: PipelineConfigModel = Field(default_factory=PipelineConfigModel)
    save_config: Optional[str] = None


class CalibrateResponse(BaseModel):
    estimator: EstimatorConfigModel
    config_text: str


class ClassifyRequest(BaseModel):
    dataset: str
    recording_id: str
    config: ConfigModel = Field(default_factory=ConfigModel)


class ClassifyTrace(BaseModel):
    per_finger_max: list[float]
    onsets: list[Optional[int]]
    span: tuple[int, int]
    t_null: float
    t_onset: float
    dt_obstruct: int
    r_branch: float


class ClassifyResponse(BaseModel):
    recording_id: str
    state: str
    finger: Optional[int]
    label: Optional[str]
    trace: ClassifyTrace


class ReplayRequest(BaseModel):
    dataset: str
    recording_id: str
    max_retries: int = 2
    config: ConfigModel = Field(default_factory=ConfigModel)


class ReplayEvent(BaseModel):
    frame: int
    event: str
    phase: str
    actions: list[str]


class ReplayResponse(BaseModel):
    recording_id: str
    final_phase: str
    attempts: int
    complete: bool
    classifications: list[str]
    events: list[ReplayEvent]
    report_text: str
    frame_interval_ms: int


class EvaluateRequest(BaseModel):
    dataset: str
    predictions: Optional[str] = None  # path; None = run the rule estimator
    config: ConfigModel = Field(default_factory=ConfigModel)
    report: Optional[str] = None       # path for the machine-readable report


class EvaluateResponse(BaseModel):
    recordings: int
    overall_accuracy: float
    per_class_accuracy: dict[str, float]
    per_class_counts: dict[str, int]
    localization_accuracy: float
    confusion: list[list[int]]
    finger_confusion: list[list[int]]
    dataset_digest: str
    report_text: str
    table: str


def _evaluation_response(report: EvaluationReport) -> EvaluateResponse:
    return EvaluateResponse(
        recordings=report.recordings,
        overall_accuracy=report.overall_accuracy,
        per_class_accuracy={k.value: v for k, v in report.per_class_accuracy.items()},
        per_class_counts={k.value: v for k, v in report.per_class_counts.items()},
        localization_accuracy=report.localization_accuracy,
        confusion=report.confusion.tolist(),
        finger_confusion=report.finger_confusion.tolist(),
        dataset_digest=report.dataset_digest,
        report_text=report.to_text(),
        table=report.to_table(),
    )


def _load(path: str) -> Dataset:
    if not Path(path).exists():
        raise ValueError(f"dataset not found: {path}")
    return load_dataset(path)


def create_app() -> FastAPI:
    app = FastAPI(title="tactile-grasp service", version=__version__)

    @app.exception_handler(DatasetError)
    async def _dataset_error(request: Request, exc: DatasetError) -> JSONResponse:
        return JSONResponse(status_code=422,
                            content={"category": "format", "detail": str(exc)})

    @app.exception_handler(CalibrationError)
    async def _calibration_error(request: Request, exc: CalibrationError) -> JSONResponse:
        return JSONResponse(status_code=422,
                            content={"category": "calibration", "detail": str(exc)})

    @app.exception_handler(ReconciliationError)
    async def _reconciliation_error(request: Request, exc: ReconciliationError) -> JSONResponse:
        return JSONResponse(status_code=422,
                            content={"category": "reconciliation", "detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400,
                            content={"category": "argument", "detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/datasets/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest) -> GenerateResponse:
        if req.kind == "benchmark":
            noise = DEFAULT_BENCHMARK_NOISE_SD if req.noise_sd is None else req.noise_sd
            mix = req.mix.to_domain()
            recordings = generate_benchmark(req.seed, mix, noise)
            meta = benchmark_meta(req.seed, mix, noise)
        else:
            noise = 0.0 if req.noise_sd is None else req.noise_sd
            recordings = generate_sweep(req.seed, req.per_class, noise)
            meta = {"generator": "sweep", "generator_seed": str(req.seed),
                    "noise_sd": f"{noise:.6g}", "per_class": str(req.per_class)}
        dataset = write_dataset(recordings, req.path, meta=meta)
        return GenerateResponse(
            path=req.path,
            recordings=len(dataset.recordings),
            class_histogram=dataset.class_histogram(),
            payload_crc32=dataset.payload_crc32,
        )

    @app.post("/estimator/calibrate", response_model=CalibrateResponse)
    def calibrate_endpoint(req: CalibrateRequest) -> CalibrateResponse:
        dataset = _load(req.dataset)
        pipeline_cfg = req.pipeline.to_domain()
        estimator_cfg = calibrate(dataset.recordings, pipeline_cfg)
        text = config_to_text(pipeline_cfg, estimator_cfg)
        if req.save_config:
            Path(req.save_config).write_text(text, encoding="utf-8")
        return CalibrateResponse(
            estimator=EstimatorConfigModel.from_domain(estimator_cfg),
            config_text=text,
        )

    @app.post("/recordings/classify", response_model=ClassifyResponse)
    def classify_endpoint(req: ClassifyRequest) -> ClassifyResponse:
        dataset = _load(req.dataset)
        rec = dataset.by_id().get(req.recording_id)
        if rec is None:
            raise ValueError(f"recording {req.recording_id!r} not in dataset")
        pipeline_cfg = req.config.pipeline.to_domain()
        estimator_cfg = req.config.estimator.to_domain()
        features = compute_features(rec, pipeline_cfg)
        state = classify(features, estimator_cfg)
        return ClassifyResponse(
            recording_id=req.recording_id,
            state=state.kind.value,
            finger=state.finger,
            label=rec.label.to_token() if rec.label else None,
            trace=ClassifyTrace(
                per_finger_max=[float(v) for v in features.per_finger_max],
                onsets=list(features.onset_times),
                span=features.span,
                t_null=estimator_cfg.t_null,
                t_onset=estimator_cfg.t_onset,
                dt_obstruct=estimator_cfg.dt_obstruct,
                r_branch=estimator_cfg.r_branch,
            ),
        )

    @app.post("/controller/replay", response_model=ReplayResponse)
    def replay_endpoint(req: ReplayRequest) -> ReplayResponse:
        dataset = _load(req.dataset)
        rec = dataset.by_id().get(req.recording_id)
        if rec is None:
            raise ValueError(f"recording {req.recording_id!r} not in dataset")
        pipeline_cfg = req.config.pipeline.to_domain()
        report = run_cycle(
            rec,
            pipeline_config=pipeline_cfg,
            estimator_config=req.config.estimator.to_domain(),
            controller_config=ControllerConfig(max_retries=req.max_retries),
        )
        return ReplayResponse(
            recording_id=req.recording_id,
            final_phase=report.final_phase.value,
            attempts=report.attempts,
            complete=report.complete,
            classifications=[c.to_token() for c in report.classifications],
            events=[
                ReplayEvent(frame=ev.frame, event=ev.event, phase=ev.phase_after.value,
                            actions=[a.to_token() for a in ev.actions])
                for ev in report.events
            ],
            report_text=report.to_text(),
            frame_interval_ms=pipeline_cfg.frame_interval_ms,
        )

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate_endpoint(req: EvaluateRequest) -> EvaluateResponse:
        dataset = _load(req.dataset)
        if req.predictions is None:
            predictions = predictions_from_estimator(
                dataset.recordings,
                req.config.pipeline.to_domain(),
                req.config.estimator.to_domain(),
            )
        else:
            if not Path(req.predictions).exists():
                raise ValueError(f"predictions file not found: {req.predictions}")
            predictions = read_predictions(req.predictions)
        report = evaluate(dataset, predictions)
        if req.report:
            Path(req.report).write_text(report.to_text(), encoding="utf-8")
        return _evaluation_response(report)

    return app


app = create_app()
