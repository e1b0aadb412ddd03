import pytest
from fastapi.testclient import TestClient

from boundarymle.service import app

from conftest import SEC2_X, SEC2_Y


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def _sep_csv():
    lines = ["x,y"] + [f"{int(x)},{y}" for x, y in zip(SEC2_X, SEC2_Y)]
    return "\n".join(lines) + "\n"


def _sep_request(**overrides):
    req = {
        "csv_text": _sep_csv(),
        "response": "y",
        "predictors": [{"name": "x"}],
        "family": "bernoulli",
    }
    req.update(overrides)
    return req


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_analyze_separated(client):
    resp = client.post("/analyze", json=_sep_request())
    assert resp.status_code == 200
    body = resp.json()
    assert body["column_names"] == ["(Intercept)", "x"]
    report = body["report"]
    assert report["degeneracy"]["j"] == 2
    assert report["lcm"]["fixed"] == list(range(8))
    assert len(report["intervals"]) == 8
    assert report["intervals"][0]["x_label"] == "x=10"


def test_analyze_unknown_column_is_422(client):
    resp = client.post("/analyze", json=_sep_request(response="missing"))
    assert resp.status_code == 422
    body = resp.json()
    assert body["stage"] == "parse"
    assert body["error"] == "ParseError"
    assert body["column"] == "missing"


def test_analyze_bad_alpha_is_422(client):
    resp = client.post("/analyze", json=_sep_request(alpha=1.5))
    assert resp.status_code == 422  # pydantic validation


def test_analyze_explicit_epsilon_and_targets(client):
    resp = client.post("/analyze", json=_sep_request(epsilon=1e-6, targets=[0, 7]))
    assert resp.status_code == 200
    report = resp.json()["report"]
    assert report["degeneracy"]["epsilon"] == 1e-6
    assert [iv["row"] for iv in report["intervals"]] == [0, 7]


def test_analyze_skip_intervals(client):
    resp = client.post("/analyze", json=_sep_request(compute_intervals=False))
    assert resp.status_code == 200
    assert "intervals" not in resp.json()["report"]


def test_analyze_trials_mismatch_is_422(client):
    bad = _sep_request(csv_text="x,y\n1,2\n2,0\n")  # y=2 with one trial
    resp = client.post("/analyze", json=bad)
    assert resp.status_code == 422
