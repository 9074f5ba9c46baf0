"""Command line interface.

Runs locally by default; with --server the same work is delegated to a running
service instance and the CSV/manifest files are reconstructed from the JSON
response byte-for-byte.

Exit codes: 0 success, 2 configuration errors, 3 cutoff-convergence failure,
1 any other library error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from .errors import ConfigError, ConvergenceError, ScrambleError
from .runner import (
    CSV_HEADER,
    emit_config,
    figure_names,
    parse_config,
    run,
    run_figure,
)


def _parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(
            f"config error: grid {text!r} must look like 'start:end:points', e.g. 0:20:400"
        )
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"config error: grid {text!r}: {exc}") from exc


def _cell_text(value: float | None) -> str:
    return "nan" if value is None else f"{value:.17g}"


def _write_server_outputs(
    payload: dict[str, Any], out_dir: Path, manifest_name: str
) -> list[Path]:
    """Rebuild the CSV files and manifest a local run would have written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    for curve in payload["curves"]:
        lines = [CSV_HEADER]
        for t, value_re, value_im, flag in curve["rows"]:
            lines.append(f"{t:.17g},{_cell_text(value_re)},{_cell_text(value_im)},{flag}")
        path = out_dir / curve["filename"]
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        paths.append(path)
    manifest_path = out_dir / manifest_name
    with open(manifest_path, "w", newline="") as fh:
        fh.write(json.dumps(payload["manifest"], indent=2, sort_keys=True) + "\n")
    paths.append(manifest_path)
    return paths


def _raise_for_response(status_code: int, body: Any) -> None:
    """Map a service error payload back onto the library's exception types."""
    if isinstance(body, dict):
        detail = body.get("detail", str(body))
        error = body.get("error", "")
    else:
        detail, error = str(body), ""
    if error == "ConvergenceError":
        raise ConvergenceError(detail)
    if status_code == 422:
        raise ConfigError(detail)
    raise ScrambleError(f"server error {status_code}: {detail}")


def _post(server: str, route: str, payload: dict[str, Any]) -> dict[str, Any]:
    import httpx

    response = httpx.post(server.rstrip("/") + route, json=payload, timeout=None)
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
    except ValueError:
        body = response.text
    _raise_for_response(response.status_code, body)


def _report(paths: list[Path]) -> None:
    for path in paths:
        print(f"wrote {path}")


def _cmd_run(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {
        "model": args.model,
        "diagnostic": args.diagnostic,
        "theta": args.theta,
        "a_op": args.a,
        "b_op": args.b,
        "initial_state": args.initial_state,
        "initial_state_2": args.initial_state_2,
        "fock_cutoff": args.fock_cutoff,
        "auto_cutoff": args.auto_cutoff,
        "normalize": args.normalize,
        "workers": args.workers,
    }
    if args.grid is not None:
        t_start, t_end, n_points = _parse_grid(args.grid)
        overrides.update({"t_start": t_start, "t_end": t_end, "n_points": n_points})
    config = parse_config(args.config, overrides)
    out_dir = Path(args.out) if args.out is not None else Path(config.output_path)
    if args.server:
        payload = _post(args.server, "/run", emit_config(config))
        paths = _write_server_outputs(
            payload, out_dir, f"run_{config.diagnostic}_manifest.json"
        )
    else:
        paths, _ = run(config, out_dir=out_dir)
    _report(paths)
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    out_dir = Path(args.out) if args.out is not None else Path(".")
    if args.server:
        payload = _post(
            args.server, "/figure", {"name": args.name, "workers": args.workers or 1}
        )
        paths = _write_server_outputs(payload, out_dir, f"{args.name}_manifest.json")
    else:
        paths, _ = run_figure(args.name, out_dir=out_dir, workers=args.workers or 1)
    _report(paths)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scramble",
        description="Scrambling and irreversibility diagnostics for two small open models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one diagnostic described by a config")
    run_p.add_argument("--config", default=None, help="JSON config file (flat keys)")
    run_p.add_argument("--model", choices=("tc", "tfim"), default=None)
    run_p.add_argument("--diagnostic", default=None)
    run_p.add_argument("--theta", type=float, default=None, help="tilt angle in radians")
    run_p.add_argument("--a", default=None, help="probe operator, e.g. sigma_z@1")
    run_p.add_argument("--b", default=None, help="target operator, e.g. sigma_z@0")
    run_p.add_argument("--initial-state", dest="initial_state", default=None)
    run_p.add_argument("--initial-state-2", dest="initial_state_2", default=None)
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--grid", default=None, help="time grid as start:end:points")
    run_p.add_argument("--fock-cutoff", dest="fock_cutoff", type=int, default=None)
    run_p.add_argument(
        "--auto-cutoff",
        dest="auto_cutoff",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="escalate the cavity cutoff until the probe converges (default on)",
    )
    run_p.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="divide echoes by the initial-state purity (default on)",
    )
    run_p.add_argument("--workers", type=int, default=None)
    run_p.add_argument("--server", default=None, help="delegate to a service URL")
    run_p.set_defaults(handler=_cmd_run)

    fig_p = sub.add_parser("figure", help="regenerate every curve of a named figure")
    fig_p.add_argument("name", choices=figure_names())
    fig_p.add_argument("--out", default=None, help="output directory")
    fig_p.add_argument("--workers", type=int, default=None)
    fig_p.add_argument("--server", default=None, help="delegate to a service URL")
    fig_p.set_defaults(handler=_cmd_figure)

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(exc, file=sys.stderr)
        return 3
    except ScrambleError as exc:
        print(exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
