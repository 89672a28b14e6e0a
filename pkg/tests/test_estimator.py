import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tactile_grasp.core import GraspKind, GraspState
from tactile_grasp.errors import CalibrationError
from tactile_grasp.estimator import (
    CalibrationGrid,
    EstimatorConfig,
    calibrate,
    classify,
    classify_recording,
    config_to_text,
    localize_branch_finger,
    parse_config_text,
)
from tactile_grasp.pipeline import PipelineConfig, PipelineFeatures
from tactile_grasp.simulator import ScenarioSpec, generate_sweep, synthesize_grasp


def features_from_series(finger_series, span=None):
    """Build a PipelineFeatures from a per-finger max-variance series."""
    series = np.asarray(finger_series, dtype=np.float64)
    t = series.shape[1]
    span = span or (0, t)
    return PipelineFeatures(
        variance=np.zeros((0, t)),
        finger_series=series,
        per_finger_max=series[:, span[0]:span[1]].max(axis=1),
        onset_times=(None, None, None, None),
        span=span,
    )


def step_series(onsets, levels, t=60):
    """Each finger's variance steps from 0 to its level at its onset frame."""
    series = np.zeros((4, t))
    for f, (onset, level) in enumerate(zip(onsets, levels)):
        if onset is not None:
            series[f, onset:] = level
    return series


CFG = EstimatorConfig(t_null=0.01, t_onset=0.01, dt_obstruct=10, r_branch=3.0)


class TestClassify:
    def test_null_below_threshold(self):
        features = features_from_series(step_series([5, 5, 5, 5],
                                                    [0.001, 0.002, 0.001, 0.001]))
        assert classify(features, CFG) == GraspState.null()

    def test_obstructed_by_onset_spread(self):
        features = features_from_series(step_series([5, 6, 30, 6],
                                                    [0.2, 0.2, 0.2, 0.2]))
        state = classify(features, CFG)
        assert state == GraspState.obstructed(0)

    def test_obstructed_by_missing_onset(self):
        features = features_from_series(step_series([12, None, 14, 13],
                                                    [0.2, 0.0, 0.2, 0.2]))
        assert classify(features, CFG) == GraspState.obstructed(0)

    def test_branch_by_variance_ratio(self):
        features = features_from_series(step_series([5, 5, 5, 5],
                                                    [0.1, 0.1, 0.45, 0.1]))
        assert classify(features, CFG) == GraspState.branch_interference(2)

    def test_good_when_balanced(self):
        features = features_from_series(step_series([5, 6, 5, 7],
                                                    [0.2, 0.25, 0.22, 0.21]))
        assert classify(features, CFG) == GraspState.good()

    def test_obstruction_wins_over_branch(self):
        # late finger also has a dominating variance: asynchrony must win
        features = features_from_series(step_series([5, 5, 40, 5],
                                                    [0.1, 0.1, 0.9, 0.1]))
        assert classify(features, CFG) == GraspState.obstructed(0)

    def test_zero_frames_rejected(self):
        features = PipelineFeatures(
            variance=np.zeros((0, 0)), finger_series=np.zeros((4, 0)),
            per_finger_max=np.zeros(4), onset_times=(None,) * 4, span=(0, 0),
        )
        with pytest.raises(ValueError):
            classify(features, CFG)

    def test_decision_total_on_random_features(self, rng):
        for _ in range(200):
            series = rng.uniform(0, 0.5, size=(4, 30))
            state = classify(features_from_series(series), CFG)
            assert state.kind in GraspKind

    def test_scale_invariance_with_coscaled_thresholds(self, rng):
        for _ in range(50):
            series = rng.uniform(0, 0.3, size=(4, 40)) ** 2
            for c in (0.25, 4.0, 64.0):
                base = classify(features_from_series(series), CFG)
                scaled = classify(features_from_series(series * c), CFG.scaled(c))
                assert base == scaled

    def test_branch_monotonicity(self, rng):
        for _ in range(100):
            pfm = rng.uniform(0.01, 0.5, size=4)
            features = features_from_series(step_series([5] * 4, pfm))
            state = classify(features, CFG)
            if state.kind is not GraspKind.BRANCH_INTERFERENCE:
                continue
            f = state.finger
            boosted = pfm.copy()
            boosted[f] *= 1.0 + rng.uniform(0.1, 5.0)
            new_state = classify(features_from_series(step_series([5] * 4, boosted)), CFG)
            assert new_state == GraspState.branch_interference(f)


class TestLocalize:
    def test_simple_argmax(self):
        assert localize_branch_finger([0, 0, 0, 1]) == 3

    def test_tie_breaks_to_lowest_index(self):
        assert localize_branch_finger([0.5, 0.5, 0.5, 0.5]) == 0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            localize_branch_finger([0.1, -0.2, 0.3, 0.4])

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            localize_branch_finger([1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(values=st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False),
                       min_size=4, max_size=4))
def test_localize_matches_python_max(values):
    best = localize_branch_finger(values)
    assert values[best] == max(values)
    assert all(values[i] < values[best] for i in range(best))


class TestCalibrate:
    def test_separable_threshold_lands_in_gap(self):
        null = synthesize_grasp(ScenarioSpec(
            scenario=GraspState.null(), contact_frame=(None,) * 4,
            grasp_depth=(1.0,) * 4, seed=0))
        good = synthesize_grasp(ScenarioSpec(
            scenario=GraspState.good(), contact_frame=(30,) * 4,
            grasp_depth=(1.5,) * 4, seed=1))
        branch = synthesize_grasp(ScenarioSpec(
            scenario=GraspState.branch_interference(2), contact_frame=(30,) * 4,
            grasp_depth=(1.5,) * 4, branch_patch=(12, 8, 2, 4), ridge_gain=2.5, seed=2))
        obstructed = synthesize_grasp(ScenarioSpec(
            scenario=GraspState.obstructed(1), contact_frame=(50, 28, 50, 50),
            grasp_depth=(1.5, 1.5, 1.5, 1.5), obstacle_patch=(10, 4, 2, 4), seed=3))
        cfg = calibrate([null, good, branch, obstructed])
        # threshold separates the null peak from the weakest contact peak
        from tactile_grasp.pipeline import compute_features
        null_peak = compute_features(null).per_finger_max.max()
        contact_peak = min(compute_features(r).per_finger_max.max()
                           for r in (good, branch, obstructed))
        assert null_peak < cfg.t_null < contact_peak
        # and the calibrated config classifies all four correctly
        for rec in (null, good, branch, obstructed):
            assert classify_recording(rec, estimator_config=cfg) == rec.label

    def test_noiseless_sweep_classified_perfectly(self, sweep_recordings):
        cfg = calibrate(sweep_recordings)
        for rec in sweep_recordings:
            assert classify_recording(rec, estimator_config=cfg) == rec.label

    def test_missing_class_reported(self, sweep_recordings):
        only_two = [r for r in sweep_recordings
                    if r.label.kind in (GraspKind.NULL, GraspKind.GOOD)]
        with pytest.raises(CalibrationError, match="branch") as excinfo:
            calibrate(only_two)
        assert "obstructed" in str(excinfo.value)

    def test_deterministic(self, sweep_recordings):
        assert calibrate(sweep_recordings) == calibrate(sweep_recordings)

    def test_shipped_defaults_come_from_default_benchmark(self, benchmark_recordings):
        assert calibrate(benchmark_recordings) == EstimatorConfig()


class TestConfigText:
    def test_round_trip(self):
        pipeline = PipelineConfig(smoothing_window=5, variance_window=9,
                                  onset_threshold=0.002, frame_interval_ms=50)
        estimator = EstimatorConfig(t_null=0.003, t_onset=0.001,
                                    dt_obstruct=7, r_branch=2.5)
        text = config_to_text(pipeline, estimator)
        parsed_pipeline, parsed_estimator = parse_config_text(text)
        assert parsed_pipeline == pipeline
        assert parsed_estimator == estimator

    def test_validation(self):
        with pytest.raises(ValueError):
            EstimatorConfig(t_null=0.0)
        with pytest.raises(ValueError):
            EstimatorConfig(dt_obstruct=0)
