import pytest
from fastapi.testclient import TestClient

from qhydro.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["scenarios"] >= 5


def test_scenarios_listing_and_filter(client):
    rows = client.get("/scenarios").json()
    names = [r["name"] for r in rows]
    assert names == sorted(names)
    filtered = client.get("/scenarios", params={"filter": "ring"}).json()
    assert [r["name"] for r in filtered] == ["ring3d"]
    assert client.get("/scenarios", params={"filter": "zzz"}).json() == []


def test_scenario_detail(client):
    body = client.get("/scenarios/gaussian1d").json()
    assert body["base_points"] == 2048
    assert body["eps"] == 1e-8
    assert body["grid_plan"] == [512, 1024, 2048]
    assert any(row["quantity"] == "velocity_w" for row in body["expected"])
    missing = client.get("/scenarios/never")
    assert missing.status_code == 422
    assert missing.json()["code"] == "invalid_config"


def test_reference_endpoint(client):
    rows = client.get("/scenarios/gaussian1d/reference").json()
    table = {r["quantity"]: r["value"] for r in rows}
    assert table["velocity_w"] == 2.0
    assert table["momentum_expectation"] == 2.0
    assert table["osmotic_at_1"] == 0.5


def test_run_endpoint_pass(client):
    response = client.post(
        "/runs",
        json={
            "scenario": "twosort_counter",
            "operations": ["check", "fields"],
            "include_artifacts": True,
        },
    )
    assert response.status_code == 200
    body = response.json()
    assert body["all_passed"] is True
    names = [a["name"] for a in body["artifacts"]]
    assert "residual_reports.json" in names
    assert any(n.startswith("fields_") for n in names)
    assert body["summary"]["verdicts"]["check:MPCE:total:base"] is True


def test_run_endpoint_validation_errors(client):
    bad = client.post("/runs", json={"scenario": "corr2d", "operations": ["dance"]})
    assert bad.status_code == 422
    assert bad.json()["code"] == "invalid_config"
    cap = client.post(
        "/runs", json={"scenario": "twosort_counter", "cap_override": 10}
    )
    assert cap.status_code == 413
    assert cap.json()["code"] == "cap_exceeded"
    assert "cap-override" in cap.json()["detail"]
