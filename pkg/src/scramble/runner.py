"""Configuration-driven experiment runner.

Validates flat-key run configs, builds model instances (escalating the cavity
cutoff until the probe overlap converges), dispatches to the diagnostics, and
writes one CSV per curve plus a JSON manifest sufficient to reproduce the run
bit for bit.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
import time
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from . import __version__
from .config import DEFAULT_TOLERANCES
from .diagnostics import (
    DiagnosticSeries,
    LightConeFit,
    TimeGrid,
    blp_trace_distance,
    commutator_growth_batch,
    corrected_f_otoc_batch,
    f_otoc_direct_batch,
    f_otoc_protocol,
    light_cone_fit,
    loschmidt_echo,
    correlator_decomposition,
)
from .dynamics import EvolutionEngine
from .errors import ConfigError, ConvergenceError
from .hilbert import LocalOperator, spin_op
from .models import (
    ModelInstance,
    PerturbationSpec,
    TCSpec,
    TFIMSpec,
    build_perturbation,
    build_tc,
    build_tfim,
    named_initial_state,
    thermal_tail_weight,
)

DIAGNOSTIC_NAMES = (
    "fotoc",
    "fotoc_protocol",
    "fotoc_corrected",
    "correlators",
    "loschmidt",
    "commutator_norm",
    "blp",
    "lightcone",
)

# diagnostics that need an explicit (a_op, b_op) pair
_PAIR_DIAGNOSTICS = (
    "fotoc",
    "fotoc_protocol",
    "fotoc_corrected",
    "correlators",
    "commutator_norm",
)

_OP_PATTERN = re.compile(r"^(sigma_[xyz])@(\d+)$")

CSV_HEADER = "t,value_re,value_im,flag"

# short probe sweep used only to judge cutoff convergence
PROBE_GRID = TimeGrid(t_start=0.0, t_end=5.0, n_points=8)
MAX_CUTOFF_DOUBLINGS = 4

_GRID_DEFAULTS: dict[str, tuple[float, float, int]] = {"loschmidt": (0.0, 50.0, 400)}
_GRID_FALLBACK = (0.0, 20.0, 400)


def parse_operator_label(text: str) -> LocalOperator:
    """Turn a label like "sigma_z@0" into the tagged single-site operator."""
    match = _OP_PATTERN.match(text)
    if match is None:
        raise ConfigError(
            f"config error: operator label {text!r} must look like 'sigma_z@0' "
            "(sigma_x, sigma_y or sigma_z, then '@', then a site index)"
        )
    return LocalOperator(site=int(match.group(2)), op=spin_op(match.group(1)), label=text)


class RunConfig(BaseModel):
    """Flat-key description of one diagnostic run.

    Every key has a default except ``model`` and ``diagnostic``; keys of the
    other model family are simply ignored.  Unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    model: Literal["tc", "tfim"]
    diagnostic: Literal[
        "fotoc",
        "fotoc_protocol",
        "fotoc_corrected",
        "correlators",
        "loschmidt",
        "commutator_norm",
        "blp",
        "lightcone",
    ]

    # spin-cavity model
    n_atoms: int = Field(4, ge=1)
    omega0: float = 2.0
    omega_c: float = 2.0
    lam: float = Field(2.0, alias="lambda")
    j_s: float = 0.0
    temperature: float = Field(10.0, gt=0.0)
    fock_cutoff: int = Field(30, ge=2)
    auto_cutoff: bool = True

    # tilted-field Ising model
    b_field: float = 0.5
    j_coupling: float = 0.8
    theta: float = math.pi / 2.0
    n_system: int = Field(4, ge=1)
    n_bath: int = Field(4, ge=1)

    # probes and initial states
    a_op: str | None = None
    b_op: str | None = None
    initial_state: Literal["rho1", "rho2", "rho3", "rho4", "rho5", "plus", "minus"] | None = None
    initial_state_2: Literal["rho1", "rho2", "rho3", "rho4", "rho5", "plus", "minus"] | None = None
    bath_state: Literal["default", "match_system"] = "default"

    # backward-evolution perturbation
    perturbation: Literal["none", "delta1", "delta2", "delta3", "tc_sigma_z"] = "none"
    omega_d: float = Field(0.0, ge=0.0)
    perturbation_site: int | None = Field(None, ge=0)

    # time grid overrides; per-diagnostic defaults fill whatever is left unset
    t_start: float | None = None
    t_end: float | None = None
    n_points: int | None = Field(None, ge=2)

    # outputs and execution
    output_path: str = "."
    normalize: bool = True
    threshold_fraction: float = Field(0.05, gt=0.0, lt=1.0)
    distances: tuple[int, ...] = (1, 2, 3)
    workers: int = Field(1, ge=1)

    @field_validator("a_op", "b_op")
    @classmethod
    def _well_formed_operator_label(cls, value: str | None) -> str | None:
        if value is not None:
            parse_operator_label(value)
        return value

    @model_validator(mode="after")
    def _diagnostic_inputs_present(self) -> "RunConfig":
        missing: list[str] = []
        if self.diagnostic in _PAIR_DIAGNOSTICS:
            missing = [key for key in ("a_op", "b_op") if getattr(self, key) is None]
        elif self.diagnostic == "lightcone":
            if self.a_op is not None:
                raise ConfigError(
                    "config error: diagnostic 'lightcone' places its own probes from "
                    "b_op and distances; leave a_op unset"
                )
            if self.b_op is None:
                missing = ["b_op"]
            if not self.distances or len(set(self.distances)) != len(self.distances) or any(
                d < 1 for d in self.distances
            ):
                raise ConfigError("config error: distances must be unique integers >= 1")
        elif self.diagnostic == "blp":
            missing = [
                key for key in ("initial_state", "initial_state_2") if getattr(self, key) is None
            ]
        if missing:
            raise ConfigError(
                f"config error: diagnostic {self.diagnostic!r} requires {', '.join(missing)}"
            )
        if self.bath_state == "match_system" and self.model != "tfim":
            raise ConfigError(
                "config error: bath_state 'match_system' needs the qubit-chain bath"
            )
        config_grid(self)  # surfaces bad t_start/t_end combinations at parse time
        return self


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(piece) for piece in err["loc"])
        if err["type"] == "missing":
            parts.append(f"missing required field {loc!r}")
        elif err["type"] == "extra_forbidden":
            parts.append(f"unknown key {loc!r}")
        elif loc:
            parts.append(f"{loc}: {err['msg']}")
        else:
            parts.append(err["msg"])
    return "config error: " + "; ".join(parts)


def config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    """Validate a flat mapping into a RunConfig, normalizing the error shape."""
    if not isinstance(data, Mapping):
        raise ConfigError("config error: config must be a JSON object with flat keys")
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc


def parse_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """Load a JSON config file and apply flag overrides (override wins).

    Overrides with value None are treated as "not given".  An empty or
    whitespace-only file behaves like an empty object, so the resulting error
    lists the required fields.
    """
    data: dict[str, Any] = {}
    if path is not None:
        source = Path(path)
        if not source.is_file():
            raise ConfigError(f"config error: config file {str(source)!r} not found")
        text = source.read_text(encoding="utf-8")
        if text.strip():
            try:
                loaded = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(
                    f"config error: config file {str(source)!r} is not valid JSON ({exc})"
                ) from exc
            if not isinstance(loaded, dict):
                raise ConfigError(
                    f"config error: config file {str(source)!r} must hold a JSON object"
                )
            data = loaded
    if overrides:
        data.update({key: value for key, value in overrides.items() if value is not None})
    return config_from_mapping(data)


def emit_config(config: RunConfig) -> dict[str, Any]:
    """JSON-ready mapping that parses back to an equal RunConfig."""
    return config.model_dump(mode="json", by_alias=True)


def config_grid(config: RunConfig) -> TimeGrid:
    base = _GRID_DEFAULTS.get(config.diagnostic, _GRID_FALLBACK)
    return TimeGrid(
        t_start=config.t_start if config.t_start is not None else base[0],
        t_end=config.t_end if config.t_end is not None else base[1],
        n_points=config.n_points if config.n_points is not None else base[2],
    )


def config_model_spec(config: RunConfig) -> TCSpec | TFIMSpec:
    if config.model == "tc":
        return TCSpec(
            n_atoms=config.n_atoms,
            omega0=config.omega0,
            omega_c=config.omega_c,
            lam=config.lam,
            j_s=config.j_s,
            temperature=config.temperature,
            fock_cutoff=config.fock_cutoff,
        )
    return TFIMSpec(
        b_field=config.b_field,
        j_coupling=config.j_coupling,
        theta=config.theta,
        n_system=config.n_system,
        n_bath=config.n_bath,
    )


def config_perturbation(config: RunConfig) -> PerturbationSpec:
    return PerturbationSpec(
        kind=config.perturbation, omega_d=config.omega_d, site=config.perturbation_site
    )


# ---------------------------------------------------------------------------
# engine construction and cutoff escalation


def build_engine(
    model_kind: str,
    spec: TCSpec | TFIMSpec,
    perturbation: PerturbationSpec,
    workers: int = 1,
) -> tuple[ModelInstance, EvolutionEngine]:
    """Build the model and wrap it in an evolution engine with its backward
    perturbation installed."""
    if model_kind == "tc":
        model = build_tc(spec)
        theta = 0.0
    else:
        model = build_tfim(spec)
        theta = spec.theta
    delta = None
    if perturbation.kind != "none":
        delta = build_perturbation(perturbation, theta, model.layout, model_kind=model_kind)
    engine = EvolutionEngine(model, delta=delta, perturbation=perturbation, workers=workers)
    return model, engine


def _probe_values(
    spec: TCSpec, perturbation: PerturbationSpec, cutoff: int, workers: int
) -> np.ndarray:
    """Short probe sweep at the given cutoff; engines are dropped afterwards."""
    probe_spec = dataclasses.replace(spec, fock_cutoff=cutoff)
    model, engine = build_engine("tc", probe_spec, perturbation, workers)
    a = parse_operator_label(f"sigma_z@{spec.n_atoms - 1}")
    b = parse_operator_label("sigma_z@0")
    series = f_otoc_direct_batch(engine, [a], b, model.rho_s0, PROBE_GRID)[0]
    return series.values.real.copy()


def escalate_cutoff(
    spec: TCSpec,
    perturbation: PerturbationSpec = PerturbationSpec(),
    workers: int = 1,
    max_doublings: int = MAX_CUTOFF_DOUBLINGS,
) -> tuple[int, list[dict[str, Any]]]:
    """Smallest cutoff (by doubling from the requested one) that converges.

    A cutoff is accepted when the thermal tail beyond it is below the tail
    tolerance and doubling it moves the probe overlap by less than the probe
    tolerance.  The probe at the doubled cutoff is reused as the next lower
    probe when escalation continues.
    """
    history: list[dict[str, Any]] = []
    cutoff = spec.fock_cutoff
    carried: tuple[int, np.ndarray] | None = None
    for _ in range(max_doublings + 1):
        tail = thermal_tail_weight(spec.omega_c, cutoff, spec.temperature)
        if tail >= DEFAULT_TOLERANCES.thermal_tail:
            history.append(
                {"cutoff": cutoff, "tail_weight": tail, "probe_delta": None, "converged": False}
            )
            cutoff *= 2
            carried = None
            continue
        if carried is not None and carried[0] == cutoff:
            lower = carried[1]
        else:
            lower = _probe_values(spec, perturbation, cutoff, workers)
        upper = _probe_values(spec, perturbation, 2 * cutoff, workers)
        delta = float(np.max(np.abs(lower - upper)))
        converged = delta < DEFAULT_TOLERANCES.probe_delta
        history.append(
            {"cutoff": cutoff, "tail_weight": tail, "probe_delta": delta, "converged": converged}
        )
        if converged:
            return cutoff, history
        carried = (2 * cutoff, upper)
        cutoff *= 2
    raise ConvergenceError(
        f"fock cutoff did not converge within {max_doublings} doublings from "
        f"{spec.fock_cutoff}; history: {history}"
    )


# ---------------------------------------------------------------------------
# job execution


@dataclasses.dataclass(frozen=True)
class FigureJob:
    """One engine-level unit of work producing one or more CSV curves."""

    figure: str
    model_kind: str
    spec: TCSpec | TFIMSpec
    diagnostic: str
    grid: TimeGrid
    b_op: str | None = None
    a_ops: tuple[str, ...] = ()
    perturbation: PerturbationSpec = PerturbationSpec()
    initial_state: str | None = None
    initial_state_2: str | None = None
    bath_state: str = "default"
    curve_tag: str | None = None
    normalize: bool = True
    distances: tuple[int, ...] = (1, 2, 3)
    threshold_fraction: float = 0.05
    auto_cutoff: bool = True


def _op_tag(label: str) -> str:
    return label.replace("@", "")


def _pair_filename(prefix: str, diagnostic: str, b_label: str, a_label: str) -> str:
    # direction label reads from the site of b to the site of a
    return f"{prefix}_{diagnostic}_{_op_tag(b_label)}to{_op_tag(a_label)}.csv"


def _system_state(job: FigureJob, model: ModelInstance) -> np.ndarray:
    if job.initial_state is None:
        return model.rho_s0
    return named_initial_state(job.initial_state, model.layout.system_count)


def _execute_job(
    job: FigureJob, model: ModelInstance, engine: EvolutionEngine
) -> tuple[list[tuple[str, DiagnosticSeries]], LightConeFit | None]:
    grid = job.grid
    prefix = job.figure
    kind = job.diagnostic
    curves: list[tuple[str, DiagnosticSeries]] = []
    fit: LightConeFit | None = None

    if kind in ("fotoc", "fotoc_protocol", "fotoc_corrected"):
        b = parse_operator_label(job.b_op)
        a_ops = [parse_operator_label(label) for label in job.a_ops]
        rho = _system_state(job, model)
        if kind == "fotoc":
            series_list = f_otoc_direct_batch(engine, a_ops, b, rho, grid)
        elif kind == "fotoc_corrected":
            series_list = corrected_f_otoc_batch(engine, a_ops, b, rho, grid)
        else:
            series_list = [f_otoc_protocol(engine, a, b, rho, grid) for a in a_ops]
        for a, series in zip(a_ops, series_list):
            curves.append((_pair_filename(prefix, kind, b.label, a.label), series))

    elif kind == "correlators":
        a = parse_operator_label(job.a_ops[0])
        b = parse_operator_label(job.b_op)
        for series in correlator_decomposition(engine, a, b, grid):
            curves.append((_pair_filename(prefix, series.kind, b.label, a.label), series))

    elif kind == "commutator_norm":
        b = parse_operator_label(job.b_op)
        a_ops = [parse_operator_label(label) for label in job.a_ops]
        for a, series in zip(a_ops, commutator_growth_batch(engine, a_ops, b, grid)):
            curves.append((_pair_filename(prefix, kind, b.label, a.label), series))

    elif kind == "lightcone":
        b = parse_operator_label(job.b_op)
        base = job.b_op.split("@")[0]
        n_sys = model.layout.system_count
        probes = []
        for d in job.distances:
            site = b.site + d
            if site >= n_sys:
                raise ConfigError(
                    f"config error: distance {d} puts the probe at site {site}, "
                    f"outside the system (sites 0..{n_sys - 1})"
                )
            probes.append(parse_operator_label(f"{base}@{site}"))
        series_list = commutator_growth_batch(engine, probes, b, grid)
        fit = light_cone_fit(
            list(zip(job.distances, series_list)), threshold_fraction=job.threshold_fraction
        )
        for probe, series in zip(probes, series_list):
            curves.append(
                (_pair_filename(prefix, "commutator_norm", b.label, probe.label), series)
            )

    elif kind == "loschmidt":
        state = job.initial_state if job.initial_state is not None else "rho1"
        n_sys = model.layout.system_count
        rho_s = named_initial_state(state, n_sys)
        if job.bath_state == "match_system":
            rho_e = named_initial_state(state, model.spec.n_bath)
        else:
            rho_e = model.rho_e0
        series = loschmidt_echo(
            engine, rho_s, rho_e, grid, normalize=job.normalize, state_label=state
        )
        tag = job.curve_tag if job.curve_tag is not None else state
        curves.append((f"{prefix}_loschmidt_{tag}.csv", series))

    elif kind == "blp":
        n_sys = model.layout.system_count
        rho1 = named_initial_state(job.initial_state, n_sys)
        rho2 = named_initial_state(job.initial_state_2, n_sys)
        series = blp_trace_distance(engine, rho1, rho2, grid)
        tag = (
            job.curve_tag
            if job.curve_tag is not None
            else f"{job.initial_state}_{job.initial_state_2}"
        )
        curves.append((f"{prefix}_blp_{tag}.csv", series))

    else:
        raise ConfigError(f"config error: unknown diagnostic {kind!r}")

    return curves, fit


def _run_jobs(
    jobs: list[FigureJob], workers: int = 1
) -> tuple[list[tuple[str, DiagnosticSeries]], list[LightConeFit], list[dict[str, Any]]]:
    """Execute jobs in order, sharing engines and cutoff escalations."""
    escalations: dict[tuple[TCSpec, PerturbationSpec], tuple[int, list[dict[str, Any]]]] = {}
    records: list[dict[str, Any]] = []
    engines: dict[tuple[str, TCSpec | TFIMSpec, PerturbationSpec], Any] = {}
    curves: list[tuple[str, DiagnosticSeries]] = []
    fits: list[LightConeFit] = []
    for job in jobs:
        spec = job.spec
        if job.model_kind == "tc" and job.auto_cutoff:
            key = (spec, job.perturbation)
            if key not in escalations:
                escalations[key] = escalate_cutoff(spec, job.perturbation, workers=workers)
                cutoff, history = escalations[key]
                records.append(
                    {"requested": spec.fock_cutoff, "converged": cutoff, "history": history}
                )
            spec = dataclasses.replace(spec, fock_cutoff=escalations[key][0])
        engine_key = (job.model_kind, spec, job.perturbation)
        if engine_key not in engines:
            engines[engine_key] = build_engine(job.model_kind, spec, job.perturbation, workers)
        model, engine = engines[engine_key]
        job_curves, fit = _execute_job(job, model, engine)
        for filename, series in job_curves:
            if any(existing == filename for existing, _ in curves):
                raise ConfigError(f"config error: duplicate curve filename {filename!r}")
            curves.append((filename, series))
        if fit is not None:
            fits.append(fit)
    return curves, fits, records


# ---------------------------------------------------------------------------
# CSV and manifest output


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def render_csv(series: DiagnosticSeries) -> str:
    """Full CSV text for one curve; the on-disk file is exactly this string."""
    times = series.times
    values = series.values
    flags = series.flags
    lines = [CSV_HEADER]
    for k in range(len(times)):
        lines.append(f"{_fmt(times[k])},{_fmt(values[k].real)},{_fmt(values[k].imag)},{flags[k]}")
    return "\n".join(lines) + "\n"


def _json_number(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def _fit_payload(fit: LightConeFit) -> dict[str, Any]:
    return {
        "distances": [int(d) for d in fit.distances],
        "onset_times": [_json_number(t) for t in fit.onset_times],
        "threshold": fit.threshold,
        "velocity": _json_number(fit.velocity),
        "r_squared": _json_number(fit.r_squared),
        "monotone_onsets": fit.monotone_onsets,
        "flags": list(fit.flags),
    }


def build_manifest(
    config_echo: dict[str, Any],
    checksums: dict[str, str],
    escalations: list[dict[str, Any]],
    fits: list[LightConeFit],
    elapsed: float,
) -> dict[str, Any]:
    if len(escalations) == 1:
        cutoff_used: int | None = escalations[0]["converged"]
    else:
        cutoff_used = None
    if not fits:
        fit_payload: Any = None
    elif len(fits) == 1:
        fit_payload = _fit_payload(fits[0])
    else:
        fit_payload = [_fit_payload(fit) for fit in fits]
    return {
        "version": __version__,
        "config": config_echo,
        "csv_sha256": dict(sorted(checksums.items())),
        "fock_cutoff_used": cutoff_used,
        "cutoff_escalations": escalations,
        "lightcone_fit": fit_payload,
        "wall_clock_seconds": round(elapsed, 3),
    }


def _write_outputs(
    curves: list[tuple[str, DiagnosticSeries]],
    fits: list[LightConeFit],
    escalations: list[dict[str, Any]],
    out_dir: Path,
    manifest_name: str,
    config_echo: dict[str, Any],
    started: float,
) -> tuple[list[Path], dict[str, Any]]:
    out_dir.mkdir(parents=True, exist_ok=True)
    checksums: dict[str, str] = {}
    paths: list[Path] = []
    for filename, series in curves:
        text = render_csv(series)
        path = out_dir / filename
        with open(path, "w", newline="") as fh:
            fh.write(text)
        checksums[filename] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        paths.append(path)
    manifest = build_manifest(
        config_echo, checksums, escalations, fits, time.perf_counter() - started
    )
    manifest_path = out_dir / manifest_name
    with open(manifest_path, "w", newline="") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    paths.append(manifest_path)
    return paths, manifest


# ---------------------------------------------------------------------------
# public entry points


def _config_job(config: RunConfig) -> FigureJob:
    return FigureJob(
        figure="run",
        model_kind=config.model,
        spec=config_model_spec(config),
        diagnostic=config.diagnostic,
        grid=config_grid(config),
        b_op=config.b_op,
        a_ops=(config.a_op,) if config.a_op is not None else (),
        perturbation=config_perturbation(config),
        initial_state=config.initial_state,
        initial_state_2=config.initial_state_2,
        bath_state=config.bath_state,
        normalize=config.normalize,
        distances=config.distances,
        threshold_fraction=config.threshold_fraction,
        auto_cutoff=config.auto_cutoff,
    )


def compute_run(
    config: RunConfig,
) -> tuple[list[tuple[str, DiagnosticSeries]], list[LightConeFit], list[dict[str, Any]]]:
    """All curves for one config, without touching the filesystem."""
    return _run_jobs([_config_job(config)], workers=config.workers)


def run(
    config: RunConfig, out_dir: str | Path | None = None
) -> tuple[list[Path], dict[str, Any]]:
    """Execute one config and write its CSV curves plus the manifest.

    Returns the written paths (manifest last) and the manifest mapping.
    """
    started = time.perf_counter()
    curves, fits, escalations = compute_run(config)
    target = Path(out_dir) if out_dir is not None else Path(config.output_path)
    return _write_outputs(
        curves,
        fits,
        escalations,
        target,
        f"run_{config.diagnostic}_manifest.json",
        emit_config(config),
        started,
    )


# ---------------------------------------------------------------------------
# figure presets

_GRID_MAIN = TimeGrid(t_start=0.0, t_end=20.0, n_points=400)
_GRID_ECHO = TimeGrid(t_start=0.0, t_end=50.0, n_points=400)

_TC_UNCOUPLED = TCSpec(
    n_atoms=4, omega0=2.0, omega_c=2.0, lam=2.0, j_s=0.0, temperature=10.0, fock_cutoff=30
)
_TC_COUPLED = dataclasses.replace(_TC_UNCOUPLED, j_s=0.5)
_TC_WITNESS = TCSpec(
    n_atoms=4, omega0=2.0, omega_c=2.5, lam=1.5, j_s=0.5, temperature=1.0, fock_cutoff=30
)

# four-panel placement table: panel letter, tilt angle, source site, probe sites
_PANEL_PLACEMENTS = (
    ("a", math.pi / 2.0, 0, (1, 2, 3)),
    ("b", math.pi / 2.0, 3, (2, 1, 0)),
    ("c", math.pi / 8.0, 0, (1, 2, 3)),
    ("d", math.pi / 8.0, 3, (2, 1, 0)),
)

_THETA_CURVES = (
    ("theta0", 0.0),
    ("thetapi8", math.pi / 8.0),
    ("theta7pi16", 7.0 * math.pi / 16.0),
    ("thetapi2", math.pi / 2.0),
)

_ECHO_PANELS = (
    ("a", "none", 0.0),
    ("b", "delta1", 0.2),
    ("c", "delta2", 0.2),
    ("d", "delta3", 0.2),
)


def _sigma_fan(sites: tuple[int, ...]) -> tuple[str, ...]:
    return tuple(f"sigma_z@{site}" for site in sites)


def _tfim(theta: float, b_field: float = 0.5, j_coupling: float = 0.8) -> TFIMSpec:
    return TFIMSpec(b_field=b_field, j_coupling=j_coupling, theta=theta, n_system=4, n_bath=4)


def _fig1() -> list[FigureJob]:
    return [
        FigureJob(
            figure="fig1",
            model_kind="tc",
            spec=_TC_UNCOUPLED,
            diagnostic="fotoc",
            grid=_GRID_MAIN,
            b_op="sigma_z@0",
            a_ops=_sigma_fan((1, 2, 3)),
        )
    ]


def _fig2() -> list[FigureJob]:
    return [
        FigureJob(
            figure=f"fig2{panel}",
            model_kind="tc",
            spec=_TC_COUPLED,
            diagnostic=diagnostic,
            grid=_GRID_MAIN,
            b_op="sigma_z@0",
            a_ops=_sigma_fan((1, 2, 3)),
        )
        for panel, diagnostic in (("a", "fotoc"), ("b", "fotoc_corrected"))
    ]


def _fig3() -> list[FigureJob]:
    return [
        FigureJob(
            figure=f"fig3{panel}",
            model_kind="tfim",
            spec=_tfim(theta),
            diagnostic="fotoc",
            grid=_GRID_MAIN,
            b_op=f"sigma_z@{source}",
            a_ops=_sigma_fan(probes),
        )
        for panel, theta, source, probes in _PANEL_PLACEMENTS
    ]


def _fig4() -> list[FigureJob]:
    # overlay of the raw and corrected overlaps on one panel
    return [
        FigureJob(
            figure="fig4",
            model_kind="tfim",
            spec=_tfim(math.pi / 2.0),
            diagnostic=diagnostic,
            grid=_GRID_MAIN,
            b_op="sigma_z@0",
            a_ops=_sigma_fan((1, 2, 3)),
        )
        for diagnostic in ("fotoc", "fotoc_corrected")
    ]


def _fig5(theta: float, name: str) -> list[FigureJob]:
    return [
        FigureJob(
            figure=name,
            model_kind="tfim",
            spec=_tfim(theta),
            diagnostic="fotoc_corrected",
            grid=_GRID_MAIN,
            b_op="sigma_z@0",
            a_ops=_sigma_fan((1, 2, 3)),
        )
    ]


def _fig6() -> list[FigureJob]:
    return [
        FigureJob(
            figure=f"fig6{panel}",
            model_kind="tfim",
            spec=_tfim(theta, b_field=0.5, j_coupling=0.5),
            diagnostic="loschmidt",
            grid=_GRID_ECHO,
            perturbation=PerturbationSpec(kind=kind, omega_d=omega_d),
            initial_state="rho1",
            curve_tag=tag,
        )
        for panel, kind, omega_d in _ECHO_PANELS
        for tag, theta in _THETA_CURVES
    ]


def _fig7() -> list[FigureJob]:
    return [
        FigureJob(
            figure=f"fig7{panel}",
            model_kind="tfim",
            spec=_tfim(math.pi / 2.0, b_field=0.5, j_coupling=0.5),
            diagnostic="loschmidt",
            grid=_GRID_ECHO,
            perturbation=PerturbationSpec(kind=kind, omega_d=omega_d),
            initial_state=state,
            bath_state="match_system",
            curve_tag=state,
        )
        for panel, kind, omega_d in (("a", "none", 0.0), ("b", "delta1", 0.2))
        for state in ("rho1", "rho2", "rho3", "rho4", "rho5")
    ]


def _fig8() -> list[FigureJob]:
    return [
        FigureJob(
            figure="fig8",
            model_kind="tc",
            spec=_TC_COUPLED,
            diagnostic="commutator_norm",
            grid=_GRID_MAIN,
            b_op="sigma_z@0",
            a_ops=_sigma_fan((1, 2, 3)),
        )
    ]


def _fig9() -> list[FigureJob]:
    return [
        FigureJob(
            figure=f"fig9{panel}",
            model_kind="tfim",
            spec=_tfim(theta, b_field=0.5, j_coupling=0.5),
            diagnostic="commutator_norm",
            grid=_GRID_MAIN,
            b_op=f"sigma_z@{source}",
            a_ops=_sigma_fan(probes),
        )
        for panel, theta, source, probes in _PANEL_PLACEMENTS
    ]


def _fig_b() -> list[FigureJob]:
    common = {
        "diagnostic": "blp",
        "grid": _GRID_MAIN,
        "initial_state": "plus",
        "initial_state_2": "minus",
        "curve_tag": "plus_minus",
    }
    return [
        FigureJob(figure="figBa", model_kind="tc", spec=_TC_WITNESS, **common),
        FigureJob(
            figure="figBb",
            model_kind="tfim",
            spec=TFIMSpec(
                b_field=0.5, j_coupling=0.75, theta=math.pi / 2.0, n_system=4, n_bath=4
            ),
            **common,
        ),
    ]


FIGURES: dict[str, Any] = {
    "fig1": _fig1,
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5a": lambda: _fig5(math.pi / 2.0, "fig5a"),
    "fig5b": lambda: _fig5(math.pi / 8.0, "fig5b"),
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
    "figB": _fig_b,
}


def figure_names() -> tuple[str, ...]:
    return tuple(FIGURES)


def compute_figure(
    name: str, workers: int = 1
) -> tuple[list[tuple[str, DiagnosticSeries]], list[LightConeFit], list[dict[str, Any]]]:
    """All curves of a named figure, without touching the filesystem."""
    builder = FIGURES.get(name)
    if builder is None:
        raise ConfigError(
            f"config error: unknown figure {name!r}, expected one of {', '.join(FIGURES)}"
        )
    return _run_jobs(builder(), workers=workers)


def run_figure(
    name: str, out_dir: str | Path | None = None, workers: int = 1
) -> tuple[list[Path], dict[str, Any]]:
    """Regenerate every curve of a named figure as CSV files plus a manifest."""
    started = time.perf_counter()
    curves, fits, escalations = compute_figure(name, workers=workers)
    target = Path(out_dir) if out_dir is not None else Path(".")
    return _write_outputs(
        curves,
        fits,
        escalations,
        target,
        f"{name}_manifest.json",
        {"figure": name, "workers": workers},
        started,
    )
