"""HTTP facade over the runner.

The service computes curves in-process and returns row data as JSON; it never
touches the filesystem.  Clients (the CLI in --server mode) reconstruct CSV
files from the rows, and because JSON numbers round-trip doubles exactly the
reconstructed bytes match a local run.  Non-finite values are sent as null.
"""

from __future__ import annotations

import hashlib
import math
import time
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .diagnostics import DiagnosticSeries
from .errors import ConfigError, ScrambleError
from .runner import (
    build_manifest,
    compute_figure,
    compute_run,
    config_from_mapping,
    emit_config,
    render_csv,
)


class FigureRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    workers: int = Field(1, ge=1)


def _cell(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def _series_rows(series: DiagnosticSeries) -> list[list[Any]]:
    rows = []
    times = series.times
    values = series.values
    flags = series.flags
    for k in range(len(times)):
        rows.append(
            [float(times[k]), _cell(values[k].real), _cell(values[k].imag), flags[k]]
        )
    return rows


def _response_payload(
    curves: list[tuple[str, DiagnosticSeries]],
    fits: list[Any],
    escalations: list[dict[str, Any]],
    config_echo: dict[str, Any],
    started: float,
) -> dict[str, Any]:
    checksums = {
        name: hashlib.sha256(render_csv(series).encode("utf-8")).hexdigest()
        for name, series in curves
    }
    manifest = build_manifest(
        config_echo, checksums, escalations, fits, time.perf_counter() - started
    )
    return {
        "curves": [
            {"filename": name, "rows": _series_rows(series)} for name, series in curves
        ],
        "manifest": manifest,
    }


def create_app() -> FastAPI:
    app = FastAPI(title="scramble", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"detail": str(exc), "error": type(exc).__name__}
        )

    @app.exception_handler(ScrambleError)
    async def _scramble_error(request: Request, exc: ScrambleError) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"detail": str(exc), "error": type(exc).__name__}
        )

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.post("/run")
    def run_endpoint(body: dict[str, Any]) -> dict[str, Any]:
        started = time.perf_counter()
        config = config_from_mapping(body)
        curves, fits, escalations = compute_run(config)
        return _response_payload(curves, fits, escalations, emit_config(config), started)

    @app.post("/figure")
    def figure_endpoint(body: FigureRequest) -> dict[str, Any]:
        started = time.perf_counter()
        curves, fits, escalations = compute_figure(body.name, workers=body.workers)
        return _response_payload(
            curves, fits, escalations, {"figure": body.name, "workers": body.workers}, started
        )

    return app


app = create_app()
