import numpy as np
import pytest

from tactile_grasp.core import (
    FRAME_COLS,
    FRAME_ROWS,
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
from tactile_grasp.errors import CalibrationError
from tactile_grasp.simulator import GraspState as SimGraspState  # same class, sanity
from tactile_grasp.simulator import ScenarioSpec, synthesize_grasp


def frame_of(value=0.0, timestamp_ms=0):
    return TaxelFrame(timestamp_ms, np.full((FRAME_ROWS, FRAME_COLS), value))


class TestFingerLayout:
    def test_column_spans_partition_the_frame(self):
        layout = FingerLayout()
        covered = []
        for f in range(4):
            first, last = layout.column_span(f)
            covered.extend(range(first, last + 1))
        assert covered == list(range(FRAME_COLS))

    def test_taxel_indices_partition_all_384(self):
        layout = FingerLayout()
        all_rows = np.concatenate([layout.taxel_indices(f) for f in range(4)])
        assert len(all_rows) == 384
        assert len(set(all_rows.tolist())) == 384

    def test_finger_out_of_range(self):
        with pytest.raises(ValueError):
            FingerLayout().column_span(4)


class TestGraspState:
    def test_fingered_states_require_finger(self):
        with pytest.raises(ValueError):
            GraspState(GraspKind.BRANCH_INTERFERENCE)
        with pytest.raises(ValueError):
            GraspState(GraspKind.GOOD, finger=1)
        with pytest.raises(ValueError):
            GraspState.obstructed(7)

    @pytest.mark.parametrize("state", [
        GraspState.null(),
        GraspState.good(),
        GraspState.branch_interference(2),
        GraspState.obstructed(0),
    ])
    def test_token_round_trip(self, state):
        assert GraspState.from_token(state.to_token()) == state

    def test_bad_tokens(self):
        for token in ("", "weird", "branch", "good 1", "branch x"):
            with pytest.raises(ValueError):
                GraspState.from_token(token)


class TestTaxelFrame:
    def test_shape_enforced(self):
        with pytest.raises(ValueError):
            TaxelFrame(0, np.zeros((16, 24)))

    def test_range_enforced(self):
        bad = np.zeros((FRAME_ROWS, FRAME_COLS))
        bad[0, 0] = 1.5
        with pytest.raises(ValueError):
            TaxelFrame(0, bad)
        bad[0, 0] = -0.1
        with pytest.raises(ValueError):
            TaxelFrame(0, bad)

    def test_values_read_only(self):
        frame = frame_of(0.5)
        with pytest.raises(ValueError):
            frame.values[0, 0] = 0.0


class TestNormalizeFrame:
    def test_baseline_maps_to_zero(self, rng):
        baseline = rng.uniform(10, 20, size=(FRAME_ROWS, FRAME_COLS))
        cal = CalibrationProfile(baseline=baseline, full_scale=100.0)
        frame = normalize_frame(baseline, cal)
        assert np.all(frame.values == 0.0)

    def test_full_scale_maps_to_one(self, rng):
        baseline = rng.uniform(10, 20, size=(FRAME_ROWS, FRAME_COLS))
        cal = CalibrationProfile(baseline=baseline, full_scale=100.0)
        frame = normalize_frame(np.full((FRAME_ROWS, FRAME_COLS), 100.0), cal)
        assert np.all(frame.values == 1.0)

    def test_matches_element_wise_recomputation(self, rng):
        baseline = rng.uniform(5, 15, size=(FRAME_ROWS, FRAME_COLS))
        full_scale = 80.0
        cal = CalibrationProfile(baseline=baseline, full_scale=full_scale)
        raw = rng.uniform(baseline, full_scale)
        frame = normalize_frame(raw, cal)
        for i in range(FRAME_ROWS):
            for j in range(FRAME_COLS):
                expected = (raw[i, j] - baseline[i, j]) / (full_scale - baseline[i, j])
                expected = np.float32(min(1.0, max(0.0, expected)))
                assert abs(float(frame.values[i, j]) - float(expected)) <= 1e-12

    def test_idempotent_under_identity_calibration(self, rng):
        values = rng.uniform(0, 1, size=(FRAME_ROWS, FRAME_COLS)).astype(np.float32)
        cal = CalibrationProfile.identity()
        once = normalize_frame(values, cal)
        twice = normalize_frame(once.values, cal)
        assert np.array_equal(once.values, twice.values)

    def test_global_mode_uses_mean_baseline(self):
        baseline = np.zeros((FRAME_ROWS, FRAME_COLS))
        baseline[0, 0] = 10.0  # mean = 10/384
        cal = CalibrationProfile(baseline=baseline, full_scale=100.0, mode="global")
        raw = np.full((FRAME_ROWS, FRAME_COLS), 50.0)
        frame = normalize_frame(raw, cal)
        expected = (50.0 - 10.0 / 384) / (100.0 - 10.0 / 384)
        assert np.allclose(frame.values, np.float32(expected))

    def test_bad_calibration_rejected(self):
        with pytest.raises(CalibrationError):
            CalibrationProfile(baseline=np.full((FRAME_ROWS, FRAME_COLS), 2.0),
                               full_scale=1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            normalize_frame(np.zeros((3, 3)), CalibrationProfile.identity())


class TestFingerSlice:
    def test_index_arithmetic(self):
        values = np.tile(np.arange(FRAME_COLS) / 16.0, (FRAME_ROWS, 1))
        frame = TaxelFrame(0, values)
        sl = finger_slice(frame, 0)
        assert np.allclose(sl, np.tile(np.array([0, 1, 2, 3]) / 16.0, (FRAME_ROWS, 1)))

    def test_partition_identity(self, rng):
        values = rng.uniform(0, 1, size=(FRAME_ROWS, FRAME_COLS)).astype(np.float32)
        frame = TaxelFrame(0, values)
        rebuilt = np.concatenate([finger_slice(frame, f) for f in range(4)], axis=1)
        assert np.array_equal(rebuilt, frame.values)

    def test_out_of_range_finger(self):
        with pytest.raises(ValueError):
            finger_slice(frame_of(), -1)

    def test_branch_recording_peaks_on_flagged_finger(self):
        spec = ScenarioSpec(
            scenario=SimGraspState.branch_interference(2),
            contact_frame=(30, 30, 30, 30),
            grasp_depth=(1.5, 1.5, 1.5, 1.5),
            branch_patch=(10, 8, 2, 4),
            ridge_gain=2.5,
            seed=5,
        )
        rec = synthesize_grasp(spec)
        stack = rec.values()
        peaks = [finger_slice(stack.max(axis=0), f).max() for f in range(4)]
        assert all(peaks[2] >= p for p in peaks)


class TestGraspRecording:
    def test_phase_order_enforced(self):
        values = [np.zeros((FRAME_ROWS, FRAME_COLS))] * 5
        with pytest.raises(ValueError):
            make_recording(values, phase_marks={"grasp": 3, "hold": 1, "release": 4})

    def test_phase_index_bounds(self):
        values = [np.zeros((FRAME_ROWS, FRAME_COLS))] * 3
        with pytest.raises(ValueError):
            make_recording(values, phase_marks={"approach": 0, "grasp": 3})

    def test_timestamps_strictly_increasing(self):
        frames = (frame_of(0, 0), frame_of(0, 0))
        with pytest.raises(ValueError):
            GraspRecording(frames=frames)

    def test_active_span_excludes_release(self):
        values = [np.zeros((FRAME_ROWS, FRAME_COLS))] * 10
        rec = make_recording(values, phase_marks={"approach": 1, "grasp": 3,
                                                  "hold": 6, "release": 8})
        assert rec.active_span() == (1, 8)

    def test_active_span_defaults_to_whole_recording(self):
        rec = make_recording([np.zeros((FRAME_ROWS, FRAME_COLS))] * 4)
        assert rec.active_span() == (0, 4)
