"""Seeded synthesis of labeled grasp recordings for the four scenarios.

Contact amplitudes follow the uniaxial response of the fitted 3-term Ogden
model for the finger material, so "how deep the finger presses" (the
indentation stretch) maps to normalized taxel pressure through a physical
stiffness curve.  Spatial patterns are phenomenological: fruit contact is a
broad elliptical patch on the distal half of a finger; a grasped branch adds
a narrow high-amplitude ridge band with a steeper temporal rise, matching
the stress-concentration signature seen in simulation of the finger's
bottom plane; an obstructing object produces an early, band-shaped contact
that plateaus while the remaining fingers follow late or not at all.

Everything is deterministic per seed.  Benchmark generation derives one RNG
per (seed, recording index), so recordings can be produced independently,
in parallel, or one at a time with identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_FRAME_INTERVAL_MS,
    DEFAULT_LAYOUT,
    FRAME_COLS,
    FRAME_ROWS,
    GraspKind,
    GraspRecording,
    GraspState,
    make_recording,
)

#: Fitted 3-term Ogden parameters for the finger material (mu_i, alpha_i).
OGDEN_DEFAULT_TERMS = (
    (0.03829, 4.1352),
    (24.4601, 0.2123),
    (24.4613, 0.2122),
)

#: Seed of the shipped default benchmark; estimator defaults are calibrated
#: on the dataset this seed produces.
DEFAULT_BENCHMARK_SEED = 101
DEFAULT_BENCHMARK_NOISE_SD = 0.012


@dataclass(frozen=True)
class OgdenParams:
    """Hyperelastic parameter set: tuples of (mu_i, alpha_i)."""

    terms: tuple[tuple[float, float], ...] = OGDEN_DEFAULT_TERMS

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("at least one Ogden term is required")
        ground_shear = sum(mu * alpha for mu, alpha in self.terms)
        if not ground_shear > 0:
            raise ValueError(
                f"sum(mu_i * alpha_i) must be positive, got {ground_shear}"
            )


DEFAULT_OGDEN = OgdenParams()


def ogden_uniaxial_nominal_stress(stretch: float | np.ndarray,
                                  params: OgdenParams = DEFAULT_OGDEN
                                  ) -> float | np.ndarray:
    """Nominal (first Piola-Kirchhoff) stress under incompressible uniaxial extension.

    P(lambda) = sum_i (2 mu_i / alpha_i) * (lambda^(alpha_i - 1)
                 - lambda^(-alpha_i/2 - 1))

    With a single term (mu, alpha=2) this reduces to the neo-Hookean
    response mu * (lambda - lambda^-2).
    """
    arr = np.asarray(stretch, dtype=np.float64)
    if (arr <= 0).any():
        raise ValueError("stretch ratio must be > 0")
    total = np.zeros_like(arr)
    for mu, alpha in params.terms:
        total += (2.0 * mu / alpha) * (arr ** (alpha - 1.0) - arr ** (-alpha / 2.0 - 1.0))
    if np.isscalar(stretch) or np.ndim(stretch) == 0:
        return float(total)
    return total


#: Stretch at which the contact model reaches full normalized pressure.
REFERENCE_STRETCH = 2.0


def contact_pressure_fraction(stretch: float | np.ndarray,
                              params: OgdenParams = DEFAULT_OGDEN,
                              reference_stretch: float = REFERENCE_STRETCH
                              ) -> float | np.ndarray:
    """Contact pressure as a fraction of the reference-stretch response."""
    reference = ogden_uniaxial_nominal_stress(reference_stretch, params)
    return ogden_uniaxial_nominal_stress(stretch, params) / reference


Rect = tuple[int, int, int, int]  # (row0, col0, n_rows, n_cols), frame coordinates


@dataclass(frozen=True)
class ScenarioSpec:
    """Full script for one synthesized grasp attempt.

    ``contact_frame[f]`` is the frame at which finger f first touches
    (None = never), ``grasp_depth[f]`` the peak indentation stretch reached;
    pressure amplitude follows the Ogden response of that stretch.
    ``branch_patch`` places the concentration ridge for branch scenarios,
    ``obstacle_patch`` the early band contact for obstructed scenarios.
    ``settle_event`` (finger, frame, gain) injects the sudden load shift a
    settling fruit produces on one finger of an otherwise good grasp.
    """

    scenario: GraspState
    contact_frame: tuple[Optional[int], Optional[int], Optional[int], Optional[int]]
    grasp_depth: tuple[float, float, float, float]
    branch_patch: Optional[Rect] = None
    noise_sd: float = 0.0
    leaf_blips: int = 0
    seed: int = 0
    frames: int = 110
    grasp_mark: int = 22
    hold_mark: int = 70
    release_mark: int = 92
    rise_frames: tuple[float, float, float, float] = (12.0, 12.0, 12.0, 12.0)
    ridge_gain: float = 2.5
    ridge_rise_factor: float = 0.5
    obstacle_patch: Optional[Rect] = None
    settle_event: Optional[tuple[int, int, float]] = None
    patch_center_row: tuple[float, float, float, float] = (16.0, 16.0, 16.0, 16.0)
    patch_axes: tuple[float, float] = (4.5, 2.0)
    pressure_scale: float = 0.55
    crosstalk: float = 0.0
    ogden: OgdenParams = DEFAULT_OGDEN

    def __post_init__(self) -> None:
        if self.frames < 4:
            raise ValueError("a recording needs at least 4 frames")
        if not 0 <= self.grasp_mark <= self.hold_mark <= self.release_mark < self.frames:
            raise ValueError("phase marks must satisfy 0 <= grasp <= hold <= release < frames")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.leaf_blips < 0:
            raise ValueError("leaf_blips must be >= 0")
        if not 0.0 <= self.crosstalk < 1.0:
            raise ValueError("crosstalk must be in [0, 1)")
        for f, frame in enumerate(self.contact_frame):
            if frame is not None and not 0 <= frame < self.frames:
                raise ValueError(f"contact_frame[{f}]={frame} outside recording")
        for f, depth in enumerate(self.grasp_depth):
            if depth < 1.0:
                raise ValueError(f"grasp_depth[{f}] must be >= 1 (no indentation = 1)")
        kind = self.scenario.kind
        if kind is GraspKind.BRANCH_INTERFERENCE:
            if self.branch_patch is None:
                raise ValueError("branch scenarios need a branch_patch")
            _check_rect_in_finger(self.branch_patch, self.scenario.finger, "branch_patch")
        if kind is GraspKind.OBSTRUCTED:
            if self.contact_frame[self.scenario.finger] is None:
                raise ValueError("the obstructed finger must have a contact frame")
            if self.obstacle_patch is not None:
                _check_rect_in_finger(self.obstacle_patch, self.scenario.finger,
                                      "obstacle_patch")
        if self.settle_event is not None:
            finger, frame, gain = self.settle_event
            if not 0 <= finger < 4:
                raise ValueError("settle_event finger out of range")
            if not 0 <= frame < self.frames:
                raise ValueError("settle_event frame outside recording")
            if gain < 0:
                raise ValueError("settle_event gain must be >= 0")

    @property
    def phase_marks(self) -> dict[str, int]:
        return {"approach": 0, "grasp": self.grasp_mark,
                "hold": self.hold_mark, "release": self.release_mark}


def _check_rect_in_finger(rect: Rect, finger: int, name: str) -> None:
    row0, col0, n_rows, n_cols = rect
    first, last = DEFAULT_LAYOUT.column_span(finger)
    if n_rows < 1 or n_cols < 1:
        raise ValueError(f"{name} must have positive extent")
    if not (0 <= row0 and row0 + n_rows <= FRAME_ROWS):
        raise ValueError(f"{name} rows outside the frame: {rect}")
    if not (first <= col0 and col0 + n_cols - 1 <= last):
        raise ValueError(f"{name} must lie within finger {finger}'s columns: {rect}")


def _ramp(t: np.ndarray, start: float, rise: float, steepness: float = 8.0) -> np.ndarray:
    """Clipped logistic ramp: exactly 0 until ``start``, 1 after ``start + rise``."""
    x = np.clip((t - start) / max(rise, 1e-9), 0.0, 1.0)
    lo = 1.0 / (1.0 + math.exp(steepness / 2.0))
    hi = 1.0 / (1.0 + math.exp(-steepness / 2.0))
    s = 1.0 / (1.0 + np.exp(-steepness * (x - 0.5)))
    return (s - lo) / (hi - lo)


def _ellipse_profile(center_row: float, center_col: float,
                     axes: tuple[float, float]) -> np.ndarray:
    """Quadratic bump on a 24x4 finger slice, peak 1 at the center."""
    r = np.arange(FRAME_ROWS, dtype=np.float64)[:, None]
    c = np.arange(4, dtype=np.float64)[None, :]
    d2 = ((r - center_row) / axes[0]) ** 2 + ((c - center_col) / axes[1]) ** 2
    return np.clip(1.0 - d2, 0.0, None)


def _rect_mask(rect: Rect) -> np.ndarray:
    mask = np.zeros((FRAME_ROWS, FRAME_COLS), dtype=np.float64)
    row0, col0, n_rows, n_cols = rect
    mask[row0:row0 + n_rows, col0:col0 + n_cols] = 1.0
    return mask


def _apply_crosstalk(canvas: np.ndarray, amount: float) -> np.ndarray:
    """Mix a fraction of each taxel's signal into its 4-neighborhood, per finger."""
    mixed = (1.0 - amount) * canvas
    share = amount / 4.0
    for f in range(4):
        sl = canvas[..., 4 * f:4 * f + 4]
        acc = np.zeros_like(sl)
        acc[:, 1:, :] += sl[:, :-1, :]
        acc[:, :-1, :] += sl[:, 1:, :]
        acc[:, :, 1:] += sl[:, :, :-1]
        acc[:, :, :-1] += sl[:, :, 1:]
        mixed[..., 4 * f:4 * f + 4] += share * acc
    return mixed


def synthesize_grasp(spec: ScenarioSpec) -> GraspRecording:
    """Render a ScenarioSpec into a labeled recording."""
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.frames, dtype=np.float64)
    canvas = np.zeros((spec.frames, FRAME_ROWS, FRAME_COLS), dtype=np.float64)

    peaks = _fruit_peaks(spec)
    kind = spec.scenario.kind

    for f in range(4):
        start = spec.contact_frame[f]
        if start is None or peaks[f] <= 0.0:
            continue
        ramp = _ramp(t, start, spec.rise_frames[f])
        stretch = 1.0 + (spec.grasp_depth[f] - 1.0) * ramp
        scale = spec.pressure_scale * contact_pressure_fraction(stretch, spec.ogden)
        if kind is GraspKind.OBSTRUCTED and f == spec.scenario.finger:
            rect = spec.obstacle_patch or _default_band(f, row0=10)
            profile = _rect_mask(rect)[:, 4 * f:4 * f + 4]
        else:
            profile = _ellipse_profile(spec.patch_center_row[f], 1.5, spec.patch_axes)
        canvas[:, :, 4 * f:4 * f + 4] += scale[:, None, None] * profile[None, :, :]

    if kind is GraspKind.BRANCH_INTERFERENCE:
        f = spec.scenario.finger
        start = spec.contact_frame[f]
        if start is None:
            raise ValueError("the branch finger must have a contact frame")
        ridge_amp = spec.ridge_gain * max(peaks)
        rise = spec.rise_frames[f] * spec.ridge_rise_factor
        ridge = ridge_amp * _ramp(t, start, rise)
        canvas += ridge[:, None, None] * _rect_mask(spec.branch_patch)[None, :, :]

    if spec.settle_event is not None:
        f, frame, gain = spec.settle_event
        amp = gain * peaks[f]
        offset = rng.uniform(-2.0, 2.0)
        blob = _ellipse_profile(spec.patch_center_row[f] + offset, 1.5, (2.5, 1.4))
        jolt = amp * _ramp(t, frame, 2.0)
        canvas[:, :, 4 * f:4 * f + 4] += jolt[:, None, None] * blob[None, :, :]

    for _ in range(spec.leaf_blips):
        f = int(rng.integers(0, 4))
        row = int(rng.integers(0, FRAME_ROWS - 1))
        col = 4 * f + int(rng.integers(0, 3))
        center = rng.uniform(spec.grasp_mark, spec.release_mark - 5)
        width = rng.uniform(1.0, 2.2)
        amp = rng.uniform(0.025, 0.07)
        pulse = amp * np.exp(-0.5 * ((t - center) / width) ** 2)
        canvas[:, row:row + 2, col:col + 2] += pulse[:, None, None]

    # Fingers open at the release mark; contact pressure ramps away.
    canvas *= (1.0 - _ramp(t, spec.release_mark, 8.0))[:, None, None]

    if spec.crosstalk > 0.0:
        canvas = _apply_crosstalk(canvas, spec.crosstalk)
    if spec.noise_sd > 0.0:
        canvas += rng.normal(0.0, spec.noise_sd, size=canvas.shape)

    values = np.clip(canvas, 0.0, 1.0).astype(np.float32)
    return make_recording(
        values,
        interval_ms=DEFAULT_FRAME_INTERVAL_MS,
        phase_marks=spec.phase_marks,
        label=spec.scenario,
        meta=_scenario_meta(spec),
    )


def _default_band(finger: int, row0: int) -> Rect:
    return (row0, 4 * finger, 2, 4)


def _fruit_peaks(spec: ScenarioSpec) -> list[float]:
    """Peak normalized pressure per finger implied by its grasp depth."""
    peaks = []
    for f in range(4):
        if spec.contact_frame[f] is None or spec.grasp_depth[f] <= 1.0:
            peaks.append(0.0)
        else:
            fraction = contact_pressure_fraction(spec.grasp_depth[f], spec.ogden)
            peaks.append(spec.pressure_scale * float(fraction))
    return peaks


def _scenario_meta(spec: ScenarioSpec) -> dict[str, str]:
    def fmt(value) -> str:
        if value is None:
            return "none"
        if isinstance(value, float):
            return f"{value:.6g}"
        if isinstance(value, (tuple, list)):
            return ",".join(fmt(v) for v in value)
        return str(value)

    meta = {
        "scenario": spec.scenario.to_token().replace(" ", ","),
        "seed": str(spec.seed),
        "contact_frames": fmt(spec.contact_frame),
        "grasp_depth": fmt(spec.grasp_depth),
        "rise_frames": fmt(spec.rise_frames),
        "noise_sd": fmt(spec.noise_sd),
    }
    if spec.scenario.kind is GraspKind.BRANCH_INTERFERENCE:
        meta["ridge_gain"] = fmt(spec.ridge_gain)
        meta["branch_patch"] = fmt(spec.branch_patch)
    if spec.scenario.kind is GraspKind.OBSTRUCTED and spec.obstacle_patch:
        meta["obstacle_patch"] = fmt(spec.obstacle_patch)
    if spec.settle_event is not None:
        meta["settle_event"] = fmt(spec.settle_event)
    if spec.leaf_blips:
        meta["leaf_blips"] = str(spec.leaf_blips)
    return meta


@dataclass(frozen=True)
class BenchmarkMix:
    """Class composition of a benchmark dataset (defaults: the 200-grasp protocol)."""

    null_without_leaves: int = 15
    null_with_leaves: int = 15
    obstructed: int = 26
    good: int = 48
    branch: int = 96

    @property
    def total(self) -> int:
        return (self.null_without_leaves + self.null_with_leaves
                + self.obstructed + self.good + self.branch)

    def plan(self) -> list[tuple[str, int]]:
        """(variant, per-class ordinal) for each recording index, class-blocked."""
        out: list[tuple[str, int]] = []
        out += [("null", i) for i in range(self.null_without_leaves)]
        out += [("null_leaves", i) for i in range(self.null_with_leaves)]
        out += [("obstructed", i) for i in range(self.obstructed)]
        out += [("good", i) for i in range(self.good)]
        out += [("branch", i) for i in range(self.branch)]
        return out


DEFAULT_MIX = BenchmarkMix()


def benchmark_recording(seed: int, index: int,
                        mix: BenchmarkMix = DEFAULT_MIX,
                        noise_sd: float = DEFAULT_BENCHMARK_NOISE_SD) -> GraspRecording:
    """Generate recording ``index`` of the benchmark for ``seed``.

    Independent of every other index: the RNG is derived from
    (seed, index), so this equals element ``index`` of
    :func:`generate_benchmark` output.
    """
    plan = mix.plan()
    if not 0 <= index < len(plan):
        raise ValueError(f"index must be in 0..{len(plan) - 1}")
    variant, ordinal = plan[index]
    rng = np.random.default_rng([seed, index])
    spec = _draw_scenario(rng, variant, ordinal, noise_sd)
    rec = synthesize_grasp(spec)
    return GraspRecording(
        frames=rec.frames,
        phase_marks=rec.phase_marks,
        label=rec.label,
        meta=rec.meta,
        recording_id=f"r{index:03d}",
    )


def _draw_scenario(rng: np.random.Generator, variant: str, ordinal: int,
                   noise_sd: float) -> ScenarioSpec:
    sub_seed = int(rng.integers(0, 2 ** 31 - 1))
    base_contact = int(rng.integers(28, 41))
    rise = tuple(float(rng.uniform(9.0, 15.0)) for _ in range(4))
    centers = tuple(float(rng.uniform(12.5, 19.5)) for _ in range(4))
    axes = (float(rng.uniform(3.5, 5.5)), float(rng.uniform(1.7, 2.4)))
    common = dict(noise_sd=noise_sd, seed=sub_seed, rise_frames=rise,
                  patch_center_row=centers, patch_axes=axes)

    if variant in ("null", "null_leaves"):
        blips = int(rng.integers(2, 6)) if variant == "null_leaves" else 0
        return ScenarioSpec(
            scenario=GraspState.null(),
            contact_frame=(None, None, None, None),
            grasp_depth=(1.0, 1.0, 1.0, 1.0),
            leaf_blips=blips,
            **common,
        )

    if variant == "good":
        contact = tuple(base_contact + int(rng.integers(-1, 2)) for _ in range(4))
        depth = tuple(float(rng.uniform(1.08, 1.90)) for _ in range(4))
        settle = None
        if rng.random() < 0.65:
            peaks = [contact_pressure_fraction(d) for d in depth]
            finger = int(np.argmax(peaks)) if rng.random() < 0.6 else int(rng.integers(0, 4))
            frame = base_contact + int(rng.integers(8, 28))
            gain = float(rng.uniform(0.9, 2.4))
            settle = (finger, frame, gain)
        return ScenarioSpec(
            scenario=GraspState.good(),
            contact_frame=contact,
            grasp_depth=depth,
            settle_event=settle,
            **common,
        )

    if variant == "obstructed":
        finger = ordinal % 4
        lag = int(rng.integers(14, 35))
        total_failure = rng.random() < 0.3
        contact: list[Optional[int]] = []
        depth: list[float] = []
        for f in range(4):
            if f == finger:
                contact.append(base_contact)
                depth.append(float(rng.uniform(1.30, 1.75)))
            elif total_failure or rng.random() < 0.15:
                contact.append(None)
                depth.append(1.0)
            else:
                contact.append(base_contact + lag + int(rng.integers(0, 4)))
                depth.append(float(rng.uniform(1.15, 1.60)))
        band_row = int(rng.integers(5, 20))
        return ScenarioSpec(
            scenario=GraspState.obstructed(finger),
            contact_frame=tuple(contact),
            grasp_depth=tuple(depth),
            obstacle_patch=(band_row, 4 * finger, 2, 4),
            **common,
        )

    if variant == "branch":
        finger = ordinal % 4
        contact = tuple(base_contact + int(rng.integers(-1, 2)) for _ in range(4))
        depth = tuple(float(rng.uniform(1.25, 1.80)) for _ in range(4))
        ridge_row = int(rng.integers(4, 21))
        gain = float(rng.uniform(0.8, 2.0))
        return ScenarioSpec(
            scenario=GraspState.branch_interference(finger),
            contact_frame=contact,
            grasp_depth=depth,
            branch_patch=(ridge_row, 4 * finger, 2, 4),
            ridge_gain=gain,
            **common,
        )

    raise ValueError(f"unknown scenario variant {variant!r}")


def generate_benchmark(seed: int = DEFAULT_BENCHMARK_SEED,
                       mix: BenchmarkMix = DEFAULT_MIX,
                       noise_sd: float = DEFAULT_BENCHMARK_NOISE_SD
                       ) -> list[GraspRecording]:
    """The full benchmark: class-blocked recordings with randomized nuisances."""
    return [
        benchmark_recording(seed, index, mix, noise_sd)
        for index in range(mix.total)
    ]


def benchmark_meta(seed: int, mix: BenchmarkMix = DEFAULT_MIX,
                   noise_sd: float = DEFAULT_BENCHMARK_NOISE_SD) -> dict[str, str]:
    """Dataset-level provenance recorded in generated TGD manifests."""
    return {
        "generator": "benchmark",
        "generator_seed": str(seed),
        "noise_sd": f"{noise_sd:.6g}",
        "mix": (f"null={mix.null_without_leaves}+{mix.null_with_leaves} "
                f"obstructed={mix.obstructed} good={mix.good} branch={mix.branch}"
                ).replace(" ", ","),
        "range_contact_frame": "28..40",
        "range_rise_frames": "9..15",
        "range_grasp_depth_good": "1.12..1.88",
        "range_grasp_depth_branch": "1.25..1.80",
        "range_ridge_gain": "1.15..3.0",
        "range_obstructed_lag": "14..34",
    }


def generate_sweep(seed: int = 7, per_class: int = 10,
                   noise_sd: float = 0.0) -> list[GraspRecording]:
    """A clean scenario sweep: ``per_class`` recordings of each state.

    Parameter ranges are deliberately tight so that, without noise, the four
    classes are exactly separable; used for calibration sanity checks.
    """
    recordings: list[GraspRecording] = []
    index = 0
    for ordinal in range(per_class):
        for variant in ("null", "good", "obstructed", "branch"):
            rng = np.random.default_rng([seed, 1000 + index])
            spec = _draw_sweep_scenario(rng, variant, ordinal, noise_sd)
            rec = synthesize_grasp(spec)
            recordings.append(GraspRecording(
                frames=rec.frames,
                phase_marks=rec.phase_marks,
                label=rec.label,
                meta=rec.meta,
                recording_id=f"s{index:03d}",
            ))
            index += 1
    return recordings


def _draw_sweep_scenario(rng: np.random.Generator, variant: str, ordinal: int,
                         noise_sd: float) -> ScenarioSpec:
    sub_seed = int(rng.integers(0, 2 ** 31 - 1))
    base_contact = int(rng.integers(30, 39))
    rise = tuple(float(rng.uniform(10.0, 13.0)) for _ in range(4))
    centers = tuple(float(rng.uniform(14.0, 18.0)) for _ in range(4))
    common = dict(noise_sd=noise_sd, seed=sub_seed, rise_frames=rise,
                  patch_center_row=centers)

    if variant == "null":
        return ScenarioSpec(
            scenario=GraspState.null(),
            contact_frame=(None, None, None, None),
            grasp_depth=(1.0, 1.0, 1.0, 1.0),
            leaf_blips=3 if ordinal % 2 else 0,
            **common,
        )
    if variant == "good":
        return ScenarioSpec(
            scenario=GraspState.good(),
            contact_frame=(base_contact,) * 4,
            grasp_depth=tuple(float(rng.uniform(1.40, 1.60)) for _ in range(4)),
            **common,
        )
    if variant == "obstructed":
        finger = ordinal % 4
        lag = int(rng.integers(18, 29))
        contact = tuple(
            base_contact if f == finger else base_contact + lag for f in range(4)
        )
        return ScenarioSpec(
            scenario=GraspState.obstructed(finger),
            contact_frame=contact,
            grasp_depth=tuple(float(rng.uniform(1.40, 1.60)) for _ in range(4)),
            obstacle_patch=(int(rng.integers(8, 16)), 4 * finger, 2, 4),
            **common,
        )
    if variant == "branch":
        finger = ordinal % 4
        return ScenarioSpec(
            scenario=GraspState.branch_interference(finger),
            contact_frame=(base_contact,) * 4,
            grasp_depth=tuple(float(rng.uniform(1.40, 1.60)) for _ in range(4)),
            branch_patch=(int(rng.integers(6, 18)), 4 * finger, 2, 4),
            ridge_gain=float(rng.uniform(2.2, 3.0)),
            **common,
        )
    raise ValueError(f"unknown scenario variant {variant!r}")
