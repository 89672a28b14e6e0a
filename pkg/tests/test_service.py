import numpy as np
import pytest
from fastapi.testclient import TestClient

from tactile_grasp.core import GraspState, make_recording
from tactile_grasp.dataset import write_dataset
from tactile_grasp.evaluation import write_predictions
from tactile_grasp.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture(scope="module")
def small_benchmark(tmp_path_factory, client):
    path = tmp_path_factory.mktemp("svc") / "small.tgd"
    response = client.post("/datasets/generate", json={
        "path": str(path), "kind": "benchmark", "seed": 9,
        "mix": {"null_without_leaves": 2, "null_with_leaves": 2,
                "obstructed": 4, "good": 4, "branch": 8},
    })
    assert response.status_code == 200, response.text
    return path, response.json()


class TestEndpoints:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"

    def test_generate_reports_composition(self, small_benchmark):
        _, body = small_benchmark
        assert body["recordings"] == 20
        assert body["class_histogram"] == {"null": 4, "obstructed": 4,
                                           "good": 4, "branch": 8}
        assert body["payload_crc32"] > 0

    def test_generate_sweep(self, client, tmp_path):
        path = tmp_path / "sweep.tgd"
        body = client.post("/datasets/generate", json={
            "path": str(path), "kind": "sweep", "seed": 3, "per_class": 2,
        }).json()
        assert body["recordings"] == 8

    def test_classify_with_trace(self, client, small_benchmark):
        path, _ = small_benchmark
        response = client.post("/recordings/classify", json={
            "dataset": str(path), "recording_id": "r000",
        })
        assert response.status_code == 200
        body = response.json()
        assert body["state"] == "null"
        assert body["label"] == "null"
        assert len(body["trace"]["per_finger_max"]) == 4

    def test_replay(self, client, small_benchmark):
        path, _ = small_benchmark
        body = client.post("/controller/replay", json={
            "dataset": str(path), "recording_id": "r012", "max_retries": 2,
        }).json()
        assert body["final_phase"] in ("detaching", "faulted", "approaching")
        assert body["attempts"] >= 1
        assert body["events"]
        assert body["report_text"].startswith("frame")

    def test_evaluate_internal_estimator(self, client, small_benchmark, tmp_path):
        path, _ = small_benchmark
        report_path = tmp_path / "report.txt"
        body = client.post("/evaluate", json={
            "dataset": str(path), "report": str(report_path),
        }).json()
        assert body["recordings"] == 20
        assert set(body["per_class_accuracy"]) == {"null", "good", "branch", "obstructed"}
        assert report_path.read_text().startswith("evaluation v1")
        assert "reference conventional" in body["report_text"]

    def test_evaluate_external_predictions(self, client, small_benchmark, tmp_path):
        path, _ = small_benchmark
        from tactile_grasp.dataset import load_dataset
        dataset = load_dataset(path)
        predictions = {r.recording_id: r.label for r in dataset.recordings}
        pred_path = tmp_path / "preds.txt"
        write_predictions(predictions, pred_path)
        body = client.post("/evaluate", json={
            "dataset": str(path), "predictions": str(pred_path),
        }).json()
        assert body["overall_accuracy"] == 1.0
        assert body["localization_accuracy"] == 1.0


class TestErrorCategories:
    def test_format_error(self, client, tmp_path):
        bad = tmp_path / "bad.tgd"
        bad.write_bytes(b"not a dataset\npayload\n")
        response = client.post("/evaluate", json={"dataset": str(bad)})
        assert response.status_code == 422
        assert response.json()["category"] == "format"

    def test_calibration_error(self, client, tmp_path):
        recs = [make_recording(np.zeros((3, 24, 16), dtype=np.float32),
                               label=GraspState.null(), recording_id=f"n{i}")
                for i in range(3)]
        path = tmp_path / "nulls.tgd"
        write_dataset(recs, path)
        response = client.post("/estimator/calibrate", json={"dataset": str(path)})
        assert response.status_code == 422
        assert response.json()["category"] == "calibration"

    def test_reconciliation_error(self, client, small_benchmark, tmp_path):
        path, _ = small_benchmark
        pred_path = tmp_path / "short.txt"
        pred_path.write_text("r000, null\n")
        response = client.post("/evaluate", json={
            "dataset": str(path), "predictions": str(pred_path),
        })
        assert response.status_code == 422
        assert response.json()["category"] == "reconciliation"

    def test_argument_error(self, client, small_benchmark):
        path, _ = small_benchmark
        response = client.post("/recordings/classify", json={
            "dataset": str(path), "recording_id": "nope",
        })
        assert response.status_code == 400
        assert response.json()["category"] == "argument"

    def test_missing_dataset(self, client):
        response = client.post("/evaluate", json={"dataset": "/nowhere/x.tgd"})
        assert response.status_code == 400
        assert response.json()["category"] == "argument"
