"""Curve-file loading: CSV schema validation plus the filename convention.

The on-disk contract is one curve per file with header ``t,value_re,value_im,flag``.
Curve files named ``<figure><panel>_<diagnostic>_<tag>.csv`` additionally carry
their figure grouping and a direction tag; anything else still loads and is
labeled by its file stem.  This package never imports the simulation library —
the CSV files are the entire interface.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EXPECTED_HEADER = ("t", "value_re", "value_im", "flag")
KNOWN_FLAGS = frozenset({"ok", "divergent"})

# diagnostic tokens that appear in curve filenames, longest first so that
# e.g. fotoc_corrected is never misread as fotoc with a longer tag
DIAGNOSTIC_TOKENS = (
    "fotoc_corrected",
    "fotoc_protocol",
    "commutator_norm",
    "correlator_c",
    "correlator_d",
    "correlator_i",
    "correlator_f",
    "loschmidt",
    "fotoc",
    "blp",
)

_FIGURE_TOKEN = re.compile(r"^(fig(?:\d+|B))([a-d])?$")
_PAIR_TAG = re.compile(r"^([a-z_]+\d+)to([a-z_]+\d+)$")


class PlotError(Exception):
    """Input CSV or plot specification is unusable."""


@dataclass(frozen=True)
class CurveName:
    """Filename-convention fields of one curve file."""

    figure: str
    panel: str | None
    diagnostic: str
    tag: str


@dataclass(frozen=True)
class Curve:
    """One loaded curve: time axis, complex samples, and per-point flags."""

    path: Path
    name: CurveName | None
    t: np.ndarray
    value_re: np.ndarray
    value_im: np.ndarray
    flags: tuple[str, ...]

    @property
    def diagnostic(self) -> str | None:
        return self.name.diagnostic if self.name is not None else None

    @property
    def label(self) -> str:
        if self.name is None:
            return self.path.stem
        return label_for_tag(self.name.tag)

    def gapped(self) -> np.ndarray:
        """Real part with flagged points replaced by NaN, so lines break there."""
        out = self.value_re.copy()
        for k, flag in enumerate(self.flags):
            if flag != "ok":
                out[k] = np.nan
        return out


def parse_filename(filename: str) -> CurveName | None:
    """Split a conventional curve filename; None when it does not follow it."""
    stem = filename[:-4] if filename.endswith(".csv") else filename
    head, _, rest = stem.partition("_")
    matched = _FIGURE_TOKEN.match(head)
    if matched is None or not rest:
        return None
    for token in DIAGNOSTIC_TOKENS:
        if rest.startswith(token + "_"):
            return CurveName(
                figure=matched.group(1),
                panel=matched.group(2),
                diagnostic=token,
                tag=rest[len(token) + 1 :],
            )
    return None


def label_for_tag(tag: str) -> str:
    """Legend label for a curve tag; pair tags read as a direction."""
    pair = _PAIR_TAG.match(tag)
    if pair is not None:
        return f"{pair.group(1)} -> {pair.group(2)}"
    return tag


def _parse_cell(text: str, column: str, row: int, path: Path) -> float:
    try:
        return float(text)
    except ValueError:
        raise PlotError(
            f"{path.name}: column '{column}': cannot parse {text!r} as a number (row {row})"
        ) from None


def load_curve(path: str | Path) -> Curve:
    """Read and validate one curve file; errors name the offending column."""
    path = Path(path)
    if not path.is_file():
        raise PlotError(f"no such CSV: {path}")
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise PlotError(f"{path.name}: empty file")
        for k, expected in enumerate(EXPECTED_HEADER):
            if k >= len(header):
                raise PlotError(f"{path.name}: missing column '{expected}'")
            if header[k] != expected:
                raise PlotError(
                    f"{path.name}: column {k + 1} should be '{expected}', found {header[k]!r}"
                )
        if len(header) > len(EXPECTED_HEADER):
            raise PlotError(f"{path.name}: unexpected column {header[len(EXPECTED_HEADER)]!r}")

        t: list[float] = []
        value_re: list[float] = []
        value_im: list[float] = []
        flags: list[str] = []
        for row_number, row in enumerate(reader, start=2):
            if len(row) != len(EXPECTED_HEADER):
                raise PlotError(
                    f"{path.name}: row {row_number} has {len(row)} cells, expected "
                    f"{len(EXPECTED_HEADER)}"
                )
            t.append(_parse_cell(row[0], "t", row_number, path))
            value_re.append(_parse_cell(row[1], "value_re", row_number, path))
            value_im.append(_parse_cell(row[2], "value_im", row_number, path))
            if row[3] not in KNOWN_FLAGS:
                raise PlotError(
                    f"{path.name}: column 'flag': unknown flag {row[3]!r} (row {row_number})"
                )
            flags.append(row[3])
    if not t:
        raise PlotError(f"{path.name}: no data rows")
    return Curve(
        path=path,
        name=parse_filename(path.name),
        t=np.asarray(t, dtype=np.float64),
        value_re=np.asarray(value_re, dtype=np.float64),
        value_im=np.asarray(value_im, dtype=np.float64),
        flags=tuple(flags),
    )
