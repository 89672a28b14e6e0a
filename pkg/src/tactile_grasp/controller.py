"""Reaction state machine for the 4-finger independently controlled gripper.

The controller consumes grasp-state classifications (plus motion-phase
completions and timeouts) and emits actuation commands: a good grasp is
detached; a null or obstructed grasp triggers open-and-reattempt until the
retry budget runs out; branch interference opens exactly the interfering
finger before detaching so the branch slips free while the other three
fingers keep the fruit.

The transition table is total: pairs that make no sense for the current
phase are no-ops with a logged warning rather than errors.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from .core import GraspKind, GraspRecording, GraspState
from .estimator import EstimatorConfig, classify
from .pipeline import GraspPipeline, PipelineConfig

logger = logging.getLogger(__name__)


class ControlPhase(enum.Enum):
    IDLE = "idle"
    APPROACHING = "approaching"
    GRASPING = "grasping"
    HOLDING = "holding"
    DETACHING = "detaching"
    RELEASING = "releasing"
    FAULTED = "faulted"


class ActionKind(enum.Enum):
    CLOSE_ALL = "close_all"
    OPEN_ALL = "open_all"
    OPEN_FINGER = "open_finger"
    DETACH = "detach"
    ABORT = "abort"
    REQUEST_REPOSITION = "request_reposition"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    finger: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is ActionKind.OPEN_FINGER:
            if self.finger is None or not 0 <= self.finger < 4:
                raise ValueError("open_finger requires a finger index in 0..3")
        elif self.finger is not None:
            raise ValueError(f"{self.kind.value} carries no finger index")

    def to_token(self) -> str:
        if self.finger is not None:
            return f"{self.kind.value}({self.finger})"
        return self.kind.value


@dataclass(frozen=True)
class Classified:
    state: GraspState


@dataclass(frozen=True)
class PhaseComplete:
    pass


@dataclass(frozen=True)
class Timeout:
    pass


Event = Union[Classified, PhaseComplete, Timeout]


@dataclass(frozen=True)
class ControllerConfig:
    """``max_retries`` bounds re-attempts after null/obstructed grasps.

    ``recheck_after_release`` is a hook for re-classifying the partial
    3-finger grasp after a branch finger was opened; off by default, in
    which case the controller proceeds straight to detach.
    """

    max_retries: int = 2
    recheck_after_release: bool = False

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class ControllerState:
    phase: ControlPhase = ControlPhase.IDLE
    retry_count: int = 0
    finger_open: tuple[bool, bool, bool, bool] = (True, True, True, True)


_ALL_OPEN = (True, True, True, True)
_ALL_CLOSED = (False, False, False, False)


def step(state: ControllerState, event: Event,
         cfg: ControllerConfig = ControllerConfig()) -> tuple[ControllerState, list[Action]]:
    """Advance the state machine by one event; returns (new state, actions)."""
    phase = state.phase

    if isinstance(event, PhaseComplete):
        if phase is ControlPhase.IDLE:
            return replace(state, phase=ControlPhase.APPROACHING), []
        if phase is ControlPhase.APPROACHING:
            return (replace(state, phase=ControlPhase.GRASPING, finger_open=_ALL_CLOSED),
                    [Action(ActionKind.CLOSE_ALL)])
        if phase is ControlPhase.GRASPING:
            return replace(state, phase=ControlPhase.HOLDING), []
        if phase is ControlPhase.DETACHING:
            return (replace(state, phase=ControlPhase.RELEASING, finger_open=_ALL_OPEN),
                    [Action(ActionKind.OPEN_ALL)])
        if phase is ControlPhase.RELEASING:
            return ControllerState(phase=ControlPhase.IDLE), []
        return _ignore(state, event)

    classifying_phases = (ControlPhase.GRASPING, ControlPhase.HOLDING)
    if isinstance(event, (Classified, Timeout)) and phase in classifying_phases:
        outcome = event.state if isinstance(event, Classified) else GraspState.null()
        kind = outcome.kind

        if kind is GraspKind.GOOD:
            return replace(state, phase=ControlPhase.DETACHING), [Action(ActionKind.DETACH)]

        if kind is GraspKind.BRANCH_INTERFERENCE:
            fingers = list(state.finger_open)
            fingers[outcome.finger] = True
            return (replace(state, phase=ControlPhase.DETACHING,
                            finger_open=tuple(fingers)),
                    [Action(ActionKind.OPEN_FINGER, outcome.finger),
                     Action(ActionKind.DETACH)])

        # Null or obstructed: open and re-attempt while retries remain.
        if state.retry_count < cfg.max_retries:
            return (replace(state, phase=ControlPhase.APPROACHING,
                            retry_count=state.retry_count + 1, finger_open=_ALL_OPEN),
                    [Action(ActionKind.OPEN_ALL), Action(ActionKind.REQUEST_REPOSITION)])
        return (replace(state, phase=ControlPhase.FAULTED, finger_open=_ALL_OPEN),
                [Action(ActionKind.ABORT)])

    return _ignore(state, event)


def _ignore(state: ControllerState, event: Event) -> tuple[ControllerState, list[Action]]:
    logger.warning("ignoring %s in phase %s", type(event).__name__, state.phase.value)
    return state, []


@dataclass(frozen=True)
class CycleEvent:
    """One dispatched event during a replayed cycle."""

    frame: int
    event: str
    phase_after: ControlPhase
    actions: tuple[Action, ...]

    def to_line(self) -> str:
        actions = ",".join(a.to_token() for a in self.actions) or "-"
        return (f"frame {self.frame} event {self.event} "
                f"phase {self.phase_after.value} actions {actions}")


@dataclass
class CycleReport:
    """Deterministic replay record of pipeline -> estimator -> controller."""

    final_phase: ControlPhase
    attempts: int
    complete: bool
    events: list[CycleEvent] = field(default_factory=list)
    classifications: list[GraspState] = field(default_factory=list)

    def actions(self) -> list[Action]:
        return [action for ev in self.events for action in ev.actions]

    def to_text(self) -> str:
        lines = [ev.to_line() for ev in self.events]
        lines.append(
            f"final {self.final_phase.value} attempts {self.attempts} "
            f"complete {'yes' if self.complete else 'no'}"
        )
        return "\n".join(lines) + "\n"


def run_cycle(recording: GraspRecording,
              pipeline_config: PipelineConfig = PipelineConfig(),
              estimator_config: EstimatorConfig = EstimatorConfig(),
              controller_config: ControllerConfig = ControllerConfig(),
              realtime: bool = False) -> CycleReport:
    """Replay one recording through the full perception/reaction stack.

    The recording's phase marks script the motion events; classification
    fires when the grasp span completes (at the release mark).  A re-attempt
    replays the same recording again, so a persistently null scene faults
    after ``max_retries`` re-attempts.  With ``realtime`` the replay sleeps
    one frame interval per frame; otherwise it runs at full speed.
    """
    marks = recording.phase_marks
    complete = all(name in marks for name in ("grasp", "hold", "release"))

    state = ControllerState()
    report = CycleReport(final_phase=state.phase, attempts=0, complete=complete)
    offset = 0

    for attempt in range(controller_config.max_retries + 1):
        report.attempts = attempt + 1
        pipeline = GraspPipeline(pipeline_config)
        classified: Optional[GraspState] = None

        for t, frame in enumerate(recording.frames):
            if realtime:
                time.sleep(pipeline_config.frame_interval_ms / 1000.0)
            pipeline.push(frame)
            if t == 0 and state.phase is ControlPhase.IDLE:
                state = _dispatch(report, state, PhaseComplete(), offset + t,
                                  "phase_complete", controller_config)
            if complete and t == marks["grasp"]:
                state = _dispatch(report, state, PhaseComplete(), offset + t,
                                  "phase_complete", controller_config)
            if complete and t == marks["hold"]:
                state = _dispatch(report, state, PhaseComplete(), offset + t,
                                  "phase_complete", controller_config)
            if complete and t == marks["release"]:
                features = pipeline.features(recording.active_span())
                classified = classify(features, estimator_config)
                report.classifications.append(classified)
                state = _dispatch(report, state, Classified(classified), offset + t,
                                  f"classified {classified.to_token()}",
                                  controller_config)

        offset += len(recording.frames)

        if classified is None:
            # Stream ended before the grasp span completed.
            report.complete = False
            break
        if state.phase in (ControlPhase.DETACHING, ControlPhase.FAULTED):
            # Detach/abort motions happen after the tactile stream ends; the
            # replay stops here so the report shows the terminal reaction.
            break
        # APPROACHING: reposition requested, try again on the next pass.

    report.final_phase = state.phase
    return report


def _dispatch(report: CycleReport, state: ControllerState, event: Event,
              frame: int, label: str, cfg: ControllerConfig) -> ControllerState:
    new_state, actions = step(state, event, cfg)
    report.events.append(CycleEvent(
        frame=frame, event=label, phase_after=new_state.phase, actions=tuple(actions),
    ))
    return new_state
