"""Command-line entry point: render figures from a JSON spec or a directory."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .csvdata import PlotError
from .figure import FORMATS, auto_discover, render_figure, spec_from_json


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot-figure",
        description="Render figures from diagnostic curve CSV files.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", metavar="JSON", help="figure specification file")
    source.add_argument(
        "--auto",
        metavar="DIR",
        help="discover conventionally named curve CSVs and render one image per figure",
    )
    parser.add_argument("--out", metavar="PATH", help="output image path (spec) or directory (auto)")
    parser.add_argument("--format", choices=FORMATS, help="image format (default png)")
    return parser


def _run(args: argparse.Namespace) -> list[Path]:
    if args.spec is not None:
        spec = spec_from_json(args.spec)
        if args.out is not None:
            spec = replace(spec, output=Path(args.out))
        if args.format is not None:
            spec = replace(spec, format=args.format)
        return [render_figure(spec)]
    specs = auto_discover(args.auto, fmt=args.format or "png", out_dir=args.out)
    return [render_figure(spec) for spec in specs]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = _run(args)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # matplotlib/io failures: report, distinct exit code
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
