"""Service tests: endpoint shapes, error mapping, and that the JSON wire
format reconstructs local CSV output byte for byte."""

from __future__ import annotations

import math

import pytest
from fastapi.testclient import TestClient

from scramble import __version__
from scramble import runner as runner_module
from scramble.cli import _write_server_outputs
from scramble.diagnostics import TimeGrid
from scramble.models import TFIMSpec
from scramble.runner import FigureJob, config_from_mapping, run
from scramble.service import create_app

RUN_BODY = {
    "model": "tfim",
    "diagnostic": "fotoc",
    "a_op": "sigma_z@1",
    "b_op": "sigma_z@0",
    "n_system": 2,
    "n_bath": 2,
    "n_points": 5,
    "t_end": 2.0,
}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


class TestHealth:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "version": __version__}


class TestRunEndpoint:
    def test_curves_and_manifest(self, client):
        response = client.post("/run", json=RUN_BODY)
        assert response.status_code == 200
        payload = response.json()
        assert [c["filename"] for c in payload["curves"]] == [
            "run_fotoc_sigma_z0tosigma_z1.csv"
        ]
        rows = payload["curves"][0]["rows"]
        assert len(rows) == 5
        assert rows[0][0] == 0.0 and rows[0][3] == "ok"
        manifest = payload["manifest"]
        assert manifest["config"]["model"] == "tfim"
        assert "run_fotoc_sigma_z0tosigma_z1.csv" in manifest["csv_sha256"]

    def test_no_nan_on_wire(self, client):
        response = client.post("/run", json=RUN_BODY)
        assert "NaN" not in response.text and "Infinity" not in response.text

    def test_empty_body_names_required_fields(self, client):
        response = client.post("/run", json={})
        assert response.status_code == 422
        assert "'model'" in response.json()["detail"]
        assert "'diagnostic'" in response.json()["detail"]

    def test_unknown_key(self, client):
        response = client.post("/run", json={**RUN_BODY, "bogus": 1})
        assert response.status_code == 422
        assert "unknown key 'bogus'" in response.json()["detail"]
        assert response.json()["error"] == "ConfigError"

    def test_library_error_maps_to_400(self, client):
        body = {**RUN_BODY, "a_op": "sigma_z@7"}  # site beyond every factor
        response = client.post("/run", json=body)
        assert response.status_code == 400
        assert response.json()["error"] == "BadSiteError"

    def test_reconstructed_bytes_match_local_run(self, client, tmp_path):
        config = config_from_mapping(RUN_BODY)
        local_paths, local_manifest = run(config, out_dir=tmp_path / "local")
        payload = client.post("/run", json=RUN_BODY).json()
        server_paths = _write_server_outputs(
            payload, tmp_path / "server", "run_fotoc_manifest.json"
        )
        assert local_paths[0].read_bytes() == server_paths[0].read_bytes()
        assert (
            payload["manifest"]["csv_sha256"] == local_manifest["csv_sha256"]
        )


class TestFigureEndpoint:
    def test_unknown_figure(self, client):
        response = client.post("/figure", json={"name": "fig99"})
        assert response.status_code == 422
        assert "unknown figure" in response.json()["detail"]

    def test_tiny_figure(self, client, monkeypatch):
        grid = TimeGrid(0.0, 1.0, 3)
        spec = TFIMSpec(n_system=2, n_bath=2)
        jobs = [
            FigureJob(figure="tiny", model_kind="tfim", spec=spec, diagnostic="fotoc",
                      grid=grid, b_op="sigma_z@0", a_ops=("sigma_z@1",))
        ]
        monkeypatch.setitem(runner_module.FIGURES, "tiny", lambda: jobs)
        response = client.post("/figure", json={"name": "tiny", "workers": 2})
        assert response.status_code == 200
        payload = response.json()
        assert payload["manifest"]["config"] == {"figure": "tiny", "workers": 2}
        assert len(payload["curves"][0]["rows"]) == 3

    def test_extra_request_key_rejected(self, client):
        response = client.post("/figure", json={"name": "fig1", "stuff": 1})
        assert response.status_code == 422


class TestNanCells:
    def test_nan_values_sent_as_null(self, client, monkeypatch):
        """Force a divergent corrected overlap and check null cells round-trip."""
        import dataclasses

        from scramble import diagnostics as diagnostics_module
        from scramble.config import DEFAULT_TOLERANCES

        monkeypatch.setattr(
            diagnostics_module,
            "DEFAULT_TOLERANCES",
            dataclasses.replace(DEFAULT_TOLERANCES, divergence=2.0),
        )
        body = {**RUN_BODY, "diagnostic": "fotoc_corrected"}
        payload = client.post("/run", json=body).json()
        rows = payload["curves"][0]["rows"]
        assert all(row[1] is None and row[3] == "divergent" for row in rows)
