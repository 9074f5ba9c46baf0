"""CLI tests: flag parsing, exit codes, file outputs, and server-mode
delegation writing the same bytes as a local run."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from scramble import cli as cli_module
from scramble import runner as runner_module
from scramble.cli import _parse_grid, build_parser, main
from scramble.diagnostics import TimeGrid
from scramble.errors import ConfigError
from scramble.models import TFIMSpec
from scramble.runner import FigureJob

RUN_FLAGS = [
    "run", "--model", "tfim", "--diagnostic", "fotoc",
    "--a", "sigma_z@1", "--b", "sigma_z@0", "--grid", "0:2:4",
]

SMALL_SIZES = {"n_system": 2, "n_bath": 2}


def _small_config(tmp_path: Path, **extra) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**SMALL_SIZES, **extra}))
    return str(path)


class TestGridParsing:
    def test_parse_grid(self):
        assert _parse_grid("0:20:400") == (0.0, 20.0, 400)
        assert _parse_grid("1.5:3:7") == (1.5, 3.0, 7)

    def test_bad_shapes(self):
        for bad in ("0:20", "0:20:400:5", "a:b:c"):
            with pytest.raises(ConfigError):
                _parse_grid(bad)


class TestRunCommand:
    def test_flags_only_run(self, tmp_path, capsys):
        config = _small_config(tmp_path)
        rc = main(RUN_FLAGS + ["--config", config, "--out", str(tmp_path / "out")])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 2 and all(line.startswith("wrote ") for line in lines)
        assert (tmp_path / "out" / "run_fotoc_sigma_z0tosigma_z1.csv").is_file()
        assert (tmp_path / "out" / "run_fotoc_manifest.json").is_file()

    def test_flag_overrides_config_file(self, tmp_path):
        config = _small_config(
            tmp_path, model="tfim", diagnostic="fotoc",
            a_op="sigma_z@1", b_op="sigma_z@0", theta=0.1, n_points=3, t_end=1.0,
        )
        rc = main(["run", "--config", config, "--theta", "0.0",
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        manifest = json.loads((tmp_path / "out" / "run_fotoc_manifest.json").read_text())
        assert manifest["config"]["theta"] == 0.0
        rows = (tmp_path / "out" / "run_fotoc_sigma_z0tosigma_z1.csv").read_text().splitlines()[1:]
        assert all(abs(float(r.split(",")[1]) - 1.0) < 1e-8 for r in rows)

    def test_missing_required_exits_2(self, tmp_path, capsys):
        rc = main(["run", "--diagnostic", "fotoc", "--out", str(tmp_path)])
        assert rc == 2
        assert "missing required field 'model'" in capsys.readouterr().err

    def test_bad_grid_exits_2(self, tmp_path, capsys):
        rc = main(RUN_FLAGS[:-2] + ["--grid", "0-20-400", "--out", str(tmp_path)])
        assert rc == 2
        assert "start:end:points" in capsys.readouterr().err

    def test_convergence_failure_exits_3(self, tmp_path, capsys):
        config = _small_config(
            tmp_path, model="tc", diagnostic="fotoc", a_op="sigma_z@0", b_op="sigma_z@0",
            n_atoms=1, omega_c=1.0, temperature=200.0, fock_cutoff=2, n_points=3, t_end=1.0,
        )
        rc = main(["run", "--config", config, "--out", str(tmp_path / "out")])
        assert rc == 3
        assert "did not converge" in capsys.readouterr().err

    def test_library_error_exits_1(self, tmp_path, capsys):
        config = _small_config(tmp_path)
        rc = main(["run", "--model", "tfim", "--diagnostic", "fotoc",
                   "--a", "sigma_z@7", "--b", "sigma_z@0", "--grid", "0:1:3",
                   "--config", config, "--out", str(tmp_path / "out")])
        assert rc == 1

    def test_normalize_flag_round_trip(self, tmp_path):
        config = _small_config(tmp_path, model="tfim", diagnostic="loschmidt",
                               n_points=3, t_end=1.0)
        rc = main(["run", "--config", config, "--no-normalize",
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        manifest = json.loads(
            (tmp_path / "out" / "run_loschmidt_manifest.json").read_text()
        )
        assert manifest["config"]["normalize"] is False


class TestFigureCommand:
    def test_unknown_figure_rejected_by_parser(self):
        with pytest.raises(SystemExit) as exc:
            main(["figure", "fig99"])
        assert exc.value.code == 2

    def test_tiny_figure(self, tmp_path, monkeypatch, capsys):
        grid = TimeGrid(0.0, 1.0, 3)
        spec = TFIMSpec(n_system=2, n_bath=2)
        jobs = [
            FigureJob(figure="tiny", model_kind="tfim", spec=spec, diagnostic="fotoc",
                      grid=grid, b_op="sigma_z@0", a_ops=("sigma_z@1",))
        ]
        monkeypatch.setitem(runner_module.FIGURES, "tiny", lambda: jobs)
        monkeypatch.setattr(cli_module, "figure_names", lambda: ("tiny",))
        # parser choices come from figure_names at build time
        rc = cli_module.main(["figure", "tiny", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "tiny_fotoc_sigma_z0tosigma_z1.csv").is_file()
        assert (tmp_path / "tiny_manifest.json").is_file()


class TestServerMode:
    def test_run_via_server_matches_local_bytes(self, tmp_path, monkeypatch):
        from fastapi.testclient import TestClient

        from scramble.service import create_app

        test_client = TestClient(create_app())

        def fake_post(server, route, payload):
            response = test_client.post(route, json=payload)
            assert response.status_code == 200, response.text
            return response.json()

        monkeypatch.setattr(cli_module, "_post", fake_post)
        config = _small_config(tmp_path)
        common = RUN_FLAGS + ["--config", config]
        assert main(common + ["--out", str(tmp_path / "local")]) == 0
        assert main(common + ["--out", str(tmp_path / "remote"),
                              "--server", "http://ignored"]) == 0
        local = (tmp_path / "local" / "run_fotoc_sigma_z0tosigma_z1.csv").read_bytes()
        remote = (tmp_path / "remote" / "run_fotoc_sigma_z0tosigma_z1.csv").read_bytes()
        assert local == remote

    def test_server_config_error_exit_code(self, tmp_path, monkeypatch):
        from fastapi.testclient import TestClient

        from scramble.service import create_app

        test_client = TestClient(create_app())

        def fake_post(server, route, payload):
            response = test_client.post(route, json=payload)
            if response.status_code != 200:
                cli_module._raise_for_response(response.status_code, response.json())
            return response.json()

        monkeypatch.setattr(cli_module, "_post", fake_post)
        config = _small_config(tmp_path, model="tfim", diagnostic="lightcone",
                               b_op="sigma_z@0", n_points=3, t_end=1.0)
        rc = main(["run", "--config", config, "--out", str(tmp_path / "out"),
                   "--server", "http://ignored"])
        assert rc == 2  # probes land outside the two-spin system


class TestParser:
    def test_serve_args(self):
        args = build_parser().parse_args(["serve", "--port", "9000"])
        assert args.port == 9000 and args.host == "127.0.0.1"

    def test_run_defaults_are_not_given(self):
        args = build_parser().parse_args(["run"])
        assert args.normalize is None and args.auto_cutoff is None
        assert args.workers is None
