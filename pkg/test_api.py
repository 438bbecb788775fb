import math
import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), "src"))

import pytest
from fastapi.testclient import TestClient

from core.config import settings
from main import app
from services import tetra_service

client = TestClient(app)

ONE_CENTER = {"centers": [[0, 0, 0]], "alpha": [{"re": 1.0, "im": 0.0}]}


def test_health_check():
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_solve_one_center():
    body = {**ONE_CENTER, "window": {"re_min": -1, "re_max": 1, "im_min": -14, "im_max": 1}}
    response = client.post("/api/v1/resonances/solve", json=body)
    assert response.status_code == 200
    (root,) = response.json()["roots"]
    assert root["im"] == pytest.approx(-4 * math.pi, abs=1e-9)
    assert root["mult"] == 1


def test_coinciding_centers_answer_400():
    body = {
        "centers": [[0, 0, 0], [0, 0, 0]],
        "alpha": [0.1, 0.2],
        "window": {"re_min": -1, "re_max": 1, "im_min": -1, "im_max": 1},
    }
    response = client.post("/api/v1/resonances/solve", json=body)
    assert response.status_code == 400


def test_certify_non_root_answers_422():
    body = {**ONE_CENTER, "k": {"re": 1.0, "im": -1.0}}
    response = client.post("/api/v1/resonances/certify", json=body)
    assert response.status_code == 422


def test_certify_tetra_optimum():
    optimum = tetra_service.optimal_alpha_oracle(1.5, math.pi)
    body = {
        "centers": [list(p) for p in tetra_service.tetra_vertices(math.pi).points],
        "alpha": [optimum.alpha_star] * 4,
        "k": {"re": optimum.k.real, "im": optimum.k.imag},
    }
    response = client.post("/api/v1/resonances/certify", json=body)
    assert response.status_code == 200
    assert response.json()["passed"] is True


def test_expand_pair():
    body = {"centers": [[0, 0, 0], [1, 0, 0]], "alpha": [0.0, 0.0]}
    response = client.post("/api/v1/resonances/expand", json=body)
    assert response.status_code == 200
    payload = response.json()
    assert payload["nu"] == 1
    assert payload["bounds"]["c11"] == pytest.approx(1.0)


def test_expand_too_large_answers_400():
    body = {"centers": [[float(j), 0.0, 0.0] for j in range(9)], "alpha": [0.1] * 9}
    assert client.post("/api/v1/resonances/expand", json=body).status_code == 400


def test_envelope_report():
    body = {
        "centers": [[0, 0, 0], [1, 0, 0]],
        "alpha": [0.0, 0.0],
        "window": {"re_min": -6, "re_max": 6, "im_min": -6, "im_max": 0.5},
    }
    response = client.post("/api/v1/bounds/envelope", json=body)
    assert response.status_code == 200
    assert response.json()["passed"] is True


def test_tetra_oracle():
    response = client.get("/api/v1/tetra/oracle", params={"f": 0.5})
    assert response.status_code == 200
    payload = response.json()
    assert payload["branch"] == "nmin2"
    assert payload["r_min"] == pytest.approx(math.log(math.pi / 2.0) / math.pi, abs=1e-12)
    assert payload["alpha"][2:] == ["inf", "inf"]


def test_tetra_oracle_unachievable():
    response = client.get("/api/v1/tetra/oracle", params={"f": 1.0, "L": math.pi})
    assert response.status_code == 400


def test_api_key_is_enforced_when_configured(monkeypatch):
    monkeypatch.setattr(settings, "API_KEY", "secret")
    assert client.get("/api/v1/tetra/oracle", params={"f": 0.5}).status_code == 401
    response = client.get("/api/v1/tetra/oracle", params={"f": 0.5}, headers={"X-API-Key": "secret"})
    assert response.status_code == 200
