"""Figure assembly: panel specifications to rendered image files.

A PlotSpec is either written by hand (JSON, see ``spec_from_json``) or derived
from a directory of conventionally named curve files (``auto_discover``).
Rendering is a pure function of the CSV contents and the spec.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.figure import Figure

from .csvdata import Curve, PlotError, load_curve, parse_filename

FORMATS = ("png", "svg")

_Y_LABELS = {
    "fotoc": "F(t)",
    "fotoc_protocol": "F(t)",
    "fotoc_corrected": "F_c(t)",
    "correlator_c": "C(t)",
    "correlator_d": "D(t)",
    "correlator_i": "I(t)",
    "correlator_f": "F(t)",
    "loschmidt": "L(t)",
    "commutator_norm": "O(t)",
    "blp": "trace distance",
}

# corrected overlays stay readable on top of the raw curves
_DASHED_DIAGNOSTICS = frozenset({"fotoc_corrected"})


@dataclass(frozen=True)
class PanelSpec:
    """One axes: the curve files drawn on it plus its labeling."""

    csv_paths: tuple[Path, ...]
    title: str = ""
    xlabel: str = "t"
    ylabel: str | None = None


@dataclass(frozen=True)
class PlotSpec:
    """A complete figure: panels, grid layout, and output target."""

    panels: tuple[PanelSpec, ...]
    output: Path
    layout: tuple[int, int] | None = None
    format: str | None = None

    def resolved_format(self) -> str:
        if self.format is not None:
            return self.format
        suffix = self.output.suffix.lstrip(".").lower()
        return suffix if suffix in FORMATS else "png"


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise PlotError(f"{context}: missing required field '{key}'")
    return mapping[key]


def _reject_unknown(mapping: dict, allowed: set[str], context: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise PlotError(f"{context}: unknown key '{key}'")


def _panel_from_mapping(mapping: dict, index: int) -> PanelSpec:
    context = f"panel {index}"
    if not isinstance(mapping, dict):
        raise PlotError(f"{context}: expected an object")
    _reject_unknown(mapping, {"csvs", "title", "xlabel", "ylabel"}, context)
    csvs = _require(mapping, "csvs", context)
    if not isinstance(csvs, list) or not csvs:
        raise PlotError(f"{context}: 'csvs' must be a non-empty list")
    return PanelSpec(
        csv_paths=tuple(Path(p) for p in csvs),
        title=str(mapping.get("title", "")),
        xlabel=str(mapping.get("xlabel", "t")),
        ylabel=mapping.get("ylabel"),
    )


def spec_from_json(path: str | Path) -> PlotSpec:
    """Load a figure specification from a JSON file."""
    path = Path(path)
    if not path.is_file():
        raise PlotError(f"no such spec file: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PlotError(f"{path.name}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise PlotError(f"{path.name}: expected a JSON object")
    _reject_unknown(raw, {"panels", "output", "layout", "format"}, path.name)
    panels = _require(raw, "panels", path.name)
    if not isinstance(panels, list) or not panels:
        raise PlotError(f"{path.name}: 'panels' must be a non-empty list")
    output = Path(str(_require(raw, "output", path.name)))
    layout = raw.get("layout")
    if layout is not None:
        if not (isinstance(layout, list) and len(layout) == 2):
            raise PlotError(f"{path.name}: 'layout' must be [rows, cols]")
        layout = (int(layout[0]), int(layout[1]))
    fmt = raw.get("format")
    if fmt is not None and fmt not in FORMATS:
        raise PlotError(f"{path.name}: 'format' must be one of {'/'.join(FORMATS)}")
    return PlotSpec(
        panels=tuple(_panel_from_mapping(p, k) for k, p in enumerate(panels)),
        output=output,
        layout=layout,
        format=fmt,
    )


def _grid_shape(n_panels: int, layout: tuple[int, int] | None) -> tuple[int, int]:
    if layout is not None:
        rows, cols = layout
        if rows < 1 or cols < 1:
            raise PlotError(f"layout {rows}x{cols} is not a valid grid")
        if rows * cols < n_panels:
            raise PlotError(f"layout {rows}x{cols} cannot hold {n_panels} panels")
        return rows, cols
    cols = math.ceil(math.sqrt(n_panels))
    return math.ceil(n_panels / cols), cols


def _derive_ylabel(diagnostics: set[str]) -> str:
    labels = sorted({_Y_LABELS.get(d, d) for d in diagnostics})
    return ", ".join(labels) if labels else "value"


def build_figure(spec: PlotSpec) -> Figure:
    """Assemble the matplotlib figure for a spec without writing it out."""
    rows, cols = _grid_shape(len(spec.panels), spec.layout)
    fig, axes = plt.subplots(rows, cols, figsize=(4.8 * cols, 3.4 * rows), squeeze=False)
    flat = axes.ravel()
    for ax, panel in zip(flat, spec.panels):
        curves = [load_curve(p) for p in panel.csv_paths]
        diagnostics = {c.diagnostic for c in curves if c.diagnostic is not None}
        for curve in curves:
            style = "--" if curve.diagnostic in _DASHED_DIAGNOSTICS else "-"
            label = curve.label
            if len(diagnostics) > 1 and curve.diagnostic is not None:
                label = f"{_Y_LABELS.get(curve.diagnostic, curve.diagnostic)} {label}"
            ax.plot(curve.t, curve.gapped(), style, linewidth=1.4, label=label)
        ax.set_xlabel(panel.xlabel)
        ax.set_ylabel(panel.ylabel if panel.ylabel is not None else _derive_ylabel(diagnostics))
        if panel.title:
            ax.set_title(panel.title)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    for ax in flat[len(spec.panels) :]:
        ax.set_visible(False)
    fig.tight_layout()
    return fig


def render_figure(spec: PlotSpec) -> Path:
    """Render a spec to its output image and return the written path."""
    fig = build_figure(spec)
    try:
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, format=spec.resolved_format(), dpi=150)
    finally:
        plt.close(fig)
    return spec.output


def auto_discover(
    directory: str | Path,
    fmt: str = "png",
    out_dir: str | Path | None = None,
) -> list[PlotSpec]:
    """Group a directory's conventional curve files into one spec per figure.

    Files sharing a figure token form one image; panel letters inside the
    token (fig3a..fig3d) become separate axes ordered alphabetically.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise PlotError(f"no such directory: {directory}")
    if fmt not in FORMATS:
        raise PlotError(f"format must be one of {'/'.join(FORMATS)}, got {fmt!r}")
    target = Path(out_dir) if out_dir is not None else directory

    grouped: dict[str, dict[str | None, list[Path]]] = {}
    for path in sorted(directory.glob("*.csv")):
        name = parse_filename(path.name)
        if name is None:
            continue
        grouped.setdefault(name.figure, {}).setdefault(name.panel, []).append(path)
    if not grouped:
        raise PlotError(f"no figure CSVs found in {directory}")

    specs = []
    for figure in sorted(grouped):
        panels = tuple(
            PanelSpec(
                csv_paths=tuple(paths),
                title=f"({letter})" if letter is not None else "",
            )
            for letter, paths in sorted(grouped[figure].items(), key=lambda kv: kv[0] or "")
        )
        specs.append(PlotSpec(panels=panels, output=target / f"{figure}.{fmt}", format=fmt))
    return specs
