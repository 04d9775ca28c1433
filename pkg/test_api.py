#!/usr/bin/env python3
"""
HTTP API tests
Endpoints of the Cograd API through the FastAPI test client.
"""

import os
import sys

import pytest
from fastapi.testclient import TestClient

# Add the src directory to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from api.cograd_api import app

WORKED = {"x": [1, 2, 3, 4], "y": [2, 2.5, 4, 5]}


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_root_and_health(client):
    root = client.get("/")
    assert root.status_code == 200
    assert root.json()["status"] == "operational"
    assert "fit" in root.json()["endpoints"]

    health = client.get("/api/health")
    assert health.status_code == 200
    assert health.json()["config"]["null_ceiling"] >= 2


def test_fit_worked_example(client):
    response = client.post("/api/fit", json={**WORKED, "level": 0.92})
    assert response.status_code == 200
    body = response.json()
    assert body["beta_tilde"] == 1.0
    assert body["beta_hat"] == pytest.approx(1.05)
    assert body["beta_star"] == 1.0
    assert (body["ci"]["lower"], body["ci"]["upper"]) == (0.5, 1.5)
    assert body["ci"]["achieved_level"] == {"num": 11, "den": 12}


def test_fit_normal_null_reports_decimals_only(client):
    response = client.post("/api/fit", json={**WORKED, "level": 0.9, "null_method": "normal"})
    assert response.status_code == 200
    ci = response.json()["ci"]
    assert ci["null_source"] == "normal"
    assert ci["g_star"] is None and ci["achieved_level"] is None
    assert ci["achieved_level_decimal"] == 0.9
    assert 0 < ci["g_star_decimal"] <= 1

    exact = client.post("/api/fit", json={**WORKED, "level": 0.92, "null_method": "exact"})
    assert exact.json()["ci"]["achieved_level"] == {"num": 11, "den": 12}


def test_fit_accepts_decimal_strings(client):
    response = client.post("/api/fit", json={"x": ["4", "1", "3", "2"], "y": ["5", "2", "4", "2.5"]})
    assert response.status_code == 200
    assert response.json()["beta_tilde_exact"] == {"num": 1, "den": 1}


def test_fit_errors(client):
    duplicate = client.post("/api/fit", json={"x": [1, 1], "y": [0, 1]})
    assert duplicate.status_code == 409

    unattainable = client.post("/api/fit", json={"x": [1, 2], "y": [2, 5], "level": 0.9})
    assert unattainable.status_code == 422
    assert unattainable.json()["detail"]["max_level"] == 0.0

    mismatched = client.post("/api/fit", json={"x": [1, 2, 3], "y": [1, 2]})
    assert mismatched.status_code == 400

    unparsable = client.post("/api/fit", json={"x": [1, 2], "y": ["a", "b"]})
    assert unparsable.status_code == 400


def test_fit_upload(client):
    files = {"file": ("worked.csv", b"x,y\n1,2\n2,2.5\n3,4\n4,5\n", "text/csv")}
    response = client.post("/api/fit/upload", files=files, params={"level": 0.92})
    assert response.status_code == 200
    assert response.json()["ci"]["g_star"] == {"num": 1, "den": 1}

    bad = client.post("/api/fit/upload", files={"file": ("bad.csv", b"a,b\n1,2\n", "text/csv")})
    assert bad.status_code == 400


def test_gtrace(client):
    response = client.post("/api/gtrace", json=WORKED)
    assert response.status_code == 200
    body = response.json()
    assert body["count"] == 5
    assert body["records"][0]["interval_left"] == "-inf"
    assert body["records"][-1]["interval_right"] == "+inf"
    assert [r["value_num"] for r in body["records"]] == [1, 3, -1, -1, -1]
    assert [r["value_den"] for r in body["records"]] == [1, 4, 4, 2, 1]


def test_nulltable(client):
    response = client.get("/api/nulltable/4")
    assert response.status_code == 200
    rows = response.json()["rows"]
    assert sum(r["count"] for r in rows) == 24
    assert all(r["n_factorial"] == 24 for r in rows)

    assert client.get("/api/nulltable/11").status_code == 413
    assert client.get("/api/nulltable/1").status_code == 400


def test_are(client):
    laplace = client.get("/api/are/laplace")
    assert laplace.status_code == 200
    assert laplace.json()["are_vs_ols"] == pytest.approx(1.5625, abs=1e-6)

    cauchy = client.get("/api/are/cauchy")
    assert cauchy.json()["are_vs_ols"] == "inf"

    assert client.get("/api/are/gumbel").status_code == 404
    assert client.get("/api/are/normal", params={"design": "geometric"}).status_code == 400


def test_simulate(client):
    response = client.post("/api/simulate", json={"n": 6, "reps": 200, "seed": 1,
                                                  "compute_ci": True, "target_level": 0.8})
    assert response.status_code == 200
    body = response.json()
    assert body["seed"] == 1
    assert 0.0 <= body["ci_coverage"] <= 1.0

    invalid = client.post("/api/simulate", json={"n": 1, "reps": 200})
    assert invalid.status_code == 422
