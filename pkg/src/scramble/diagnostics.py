"""Scrambling and irreversibility diagnostics built on reduced evolution maps.

Every diagnostic returns a :class:`DiagnosticSeries` carrying the time grid,
complex values, per-point status flags, and a metadata echo sufficient to
reproduce the run.  The interferometric overlap is available through two
independent routes (a direct trace formula and a simulated control-qubit
protocol) so either can serve as a cross-check on the other; the two must
agree to float precision and are never merged into one code path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES
from .dynamics import EvolutionEngine, _product_mult_right, _sys_mult_left
from .errors import (
    ConfigError,
    LayoutError,
    NotHermitianError,
    NotNormalizedError,
    NotUnitaryError,
)
from .hilbert import LocalOperator, SpaceLayout, embed, spin_op
from .linalg import as_operator, dagger, is_hermitian, is_psd, is_unitary, kron, spectral_norm, trace_norm
from .models import PerturbationSpec, TCSpec, TFIMSpec

# An increase in trace distance smaller than this is treated as numerical
# noise rather than a backflow event.
WITNESS_INCREASE = 1e-6

# Fraction of a series' own maximum that defines its arrival onset.
LIGHT_CONE_THRESHOLD = 0.05


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = t_start + i * step, step = (t_end - t_start) / (n - 1).

    The times are always regenerated from this formula so that repeated runs
    with equal parameters land on bit-identical grids.
    """

    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise ConfigError("config error: time grid endpoints must be finite")
        if self.t_start < 0:
            raise ConfigError(f"config error: t_start must be >= 0, got {self.t_start}")
        if self.t_end <= self.t_start:
            raise ConfigError(
                f"config error: t_end must exceed t_start, got [{self.t_start}, {self.t_end}]"
            )
        if self.n_points < 2:
            raise ConfigError(f"config error: n_points must be >= 2, got {self.n_points}")

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    def times(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.n_points, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class DiagnosticSeries:
    """One diagnostic evaluated on a time grid.

    ``values`` is complex even for quantities that are real in exact
    arithmetic; consumers that want the physical number read the real part
    and can use the imaginary part as a numerical-noise check.  ``flags``
    holds one status string per point ("ok" or "divergent").
    """

    grid: TimeGrid
    values: np.ndarray
    kind: str
    metadata: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n_points,):
            raise LayoutError(
                f"layout error: {values.shape} values on a {self.grid.n_points}-point grid"
            )
        object.__setattr__(self, "values", values)
        if not self.flags:
            object.__setattr__(self, "flags", ("ok",) * self.grid.n_points)
        elif len(self.flags) != self.grid.n_points:
            raise LayoutError(
                f"layout error: {len(self.flags)} flags on a {self.grid.n_points}-point grid"
            )

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def real_values(self) -> np.ndarray:
        return self.values.real


@dataclass(frozen=True, eq=False)
class LightConeFit:
    """Arrival-time fit across a family of operator distances.

    ``onset_times`` aligns with ``distances``; a series that never crosses its
    threshold reports an onset of +inf and is excluded from the fit.
    ``k0_xi0_fit`` is a reserved slot for an exponential front fit, which is
    not meaningful at the exactly diagonalizable sizes handled here, so it is
    always None.
    """

    distances: tuple[float, ...]
    onset_times: tuple[float, ...]
    threshold: float
    velocity: float
    r_squared: float
    monotone_onsets: bool
    flags: tuple[str, ...] = ()
    k0_xi0_fit: tuple[float, float] | None = None


def _series_metadata(engine: EvolutionEngine, grid: TimeGrid, **extra) -> dict:
    spec = engine.model.spec
    if isinstance(spec, TCSpec):
        model = "tc"
    elif isinstance(spec, TFIMSpec):
        model = "tfim"
    else:
        model = type(spec).__name__.lower()
    pert = engine.perturbation if engine.perturbation is not None else PerturbationSpec()
    md = {
        "model": model,
        "model_params": asdict(spec),
        "perturbation": asdict(pert),
        "grid": {"t_start": grid.t_start, "t_end": grid.t_end, "n_points": grid.n_points},
    }
    for key, value in extra.items():
        if value is not None:
            md[key] = value
    return md


def _embedded_unitary(op: LocalOperator, layout: SpaceLayout) -> np.ndarray:
    mat = embed(op, layout, scope="system")
    if not is_unitary(mat):
        raise NotUnitaryError(f"operator not unitary: {op.label}")
    return mat


def _require_density(rho, dim: int, name: str) -> np.ndarray:
    mat = as_operator(rho)
    if mat.shape[0] != dim:
        raise LayoutError(f"layout error: {name} has dim {mat.shape[0]}, expected {dim}")
    if not is_hermitian(mat):
        raise NotHermitianError(f"not hermitian: {name}")
    if abs(np.trace(mat) - 1.0) > max(DEFAULT_TOLERANCES.normalization, 1e-12 * dim):
        raise NotNormalizedError(f"not normalized: {name} has trace {np.trace(mat):.6g}")
    if not is_psd(mat):
        raise NotNormalizedError(f"not normalized: {name} has negative eigenvalues")
    return mat


def _fotoc_values(
    engine: EvolutionEngine,
    a_mats: Sequence[np.ndarray],
    b_mat: np.ndarray,
    rho_s0: np.ndarray,
    times: np.ndarray,
) -> np.ndarray:
    """Complex interferometric overlaps for several probe operators at once.

    The two map sweeps depend only on b and the initial state, so evaluating a
    family of probes against one target costs the same as evaluating one.
    """
    forward = engine.map_series("forward", b_mat @ rho_s0, times)
    backward = engine.adjoint_map_series("backward", dagger(b_mat), times)
    a_pairs = [(a, dagger(a)) for a in a_mats]
    out = np.empty((len(a_mats), len(times)), dtype=np.complex128)
    for k in range(len(times)):
        x = forward[k]
        y = backward[k]
        for j, (a, a_dag) in enumerate(a_pairs):
            out[j, k] = np.trace(y @ (a @ x @ a_dag))
    return out


def f_otoc_direct(
    engine: EvolutionEngine,
    a: LocalOperator,
    b: LocalOperator,
    rho_s0: np.ndarray,
    grid: TimeGrid,
) -> DiagnosticSeries:
    """Interferometric overlap Tr[(xi_b^dag(t) b^dag) a (xi_f(t) b rho_S) a^dag].

    Built from one forward state sweep and one backward adjoint sweep; no
    control qubit is introduced.
    """
    layout = engine.model.layout
    a_mat = _embedded_unitary(a, layout)
    b_mat = _embedded_unitary(b, layout)
    rho = _require_density(rho_s0, engine.ds, "rho_s0")
    values = _fotoc_values(engine, [a_mat], b_mat, rho, grid.times())[0]
    md = _series_metadata(engine, grid, a=a.label, b=b.label, route="direct")
    return DiagnosticSeries(grid=grid, values=values, kind="fotoc", metadata=md)


def f_otoc_direct_batch(
    engine: EvolutionEngine,
    a_ops: Sequence[LocalOperator],
    b: LocalOperator,
    rho_s0: np.ndarray,
    grid: TimeGrid,
) -> list[DiagnosticSeries]:
    """Direct-route overlaps for several probes against one target.

    Shares the forward and backward sweeps across the whole probe family, so
    the cost matches a single f_otoc_direct call; each returned series is
    identical to the corresponding individual run.
    """
    layout = engine.model.layout
    a_mats = [_embedded_unitary(op, layout) for op in a_ops]
    b_mat = _embedded_unitary(b, layout)
    rho = _require_density(rho_s0, engine.ds, "rho_s0")
    batch = _fotoc_values(engine, a_mats, b_mat, rho, grid.times())
    out = []
    for j, op in enumerate(a_ops):
        md = _series_metadata(engine, grid, a=op.label, b=b.label, route="direct")
        out.append(DiagnosticSeries(grid=grid, values=batch[j], kind="fotoc", metadata=md))
    return out


def corrected_f_otoc_batch(
    engine: EvolutionEngine,
    a_ops: Sequence[LocalOperator],
    b: LocalOperator,
    rho_s0: np.ndarray,
    grid: TimeGrid,
) -> list[DiagnosticSeries]:
    """Corrected overlaps for several probes sharing one reference run."""
    layout = engine.model.layout
    a_mats = [_embedded_unitary(op, layout) for op in a_ops]
    b_mat = _embedded_unitary(b, layout)
    rho = _require_density(rho_s0, engine.ds, "rho_s0")
    eye = np.eye(engine.ds, dtype=np.complex128)
    batch = _fotoc_values(engine, [*a_mats, eye], b_mat, rho, grid.times())
    denom = batch[-1].real
    out = []
    for j, op in enumerate(a_ops):
        numer = batch[j].real
        values = np.empty(grid.n_points, dtype=np.complex128)
        flags = []
        for k in range(grid.n_points):
            if abs(denom[k]) < DEFAULT_TOLERANCES.divergence:
                values[k] = complex(np.nan, np.nan)
                flags.append("divergent")
            else:
                values[k] = complex(numer[k] / denom[k], 0.0)
                flags.append("ok")
        md = _series_metadata(engine, grid, a=op.label, b=b.label, route="direct")
        md["n_divergent"] = flags.count("divergent")
        out.append(
            DiagnosticSeries(
                grid=grid, values=values, kind="fotoc_corrected", metadata=md, flags=tuple(flags)
            )
        )
    return out


def f_otoc_protocol(
    engine: EvolutionEngine,
    a: LocalOperator,
    b: LocalOperator,
    rho_s0: np.ndarray,
    grid: TimeGrid,
) -> DiagnosticSeries:
    """Interferometric overlap via an explicitly simulated control-qubit run.

    A control qubit prepared in |+> steers: (1) b on the c=1 branch, (2) the
    forward map, (3) conjugation by a, (4) the backward map, (5) b on the c=0
    branch; the readout is the literal expectation of sigma-x on the control.
    Kept entirely separate from the direct route so the two stay independent
    cross-checks.
    """
    layout = engine.model.layout
    a_mat = _embedded_unitary(a, layout)
    b_mat = _embedded_unitary(b, layout)
    rho = _require_density(rho_s0, engine.ds, "rho_s0")
    times = grid.times()
    ds = engine.ds
    a_dag = dagger(a_mat)
    b_dag = dagger(b_mat)

    # Control-first ordering: the joint state is a 2x2 grid of system blocks
    # rho_cc' = <c| rho |c'>.  After preparing (|0>+|1>)/sqrt(2) on the control
    # and applying b on the c=1 branch the blocks are as below, and the lower
    # off-diagonal block stays the adjoint of the upper one through every
    # later step, so only three blocks need evolving.
    blk00 = rho / 2.0
    blk01 = (rho @ b_dag) / 2.0
    blk11 = (b_mat @ rho @ b_dag) / 2.0
    fwd00 = engine.map_series("forward", blk00, times)
    fwd01 = engine.map_series("forward", blk01, times)
    fwd11 = engine.map_series("forward", blk11, times)

    readout_op = kron(spin_op("x"), np.eye(ds, dtype=np.complex128))
    values = np.empty(len(times), dtype=np.complex128)
    for k, t in enumerate(times):
        e00 = a_mat @ fwd00[k] @ a_dag
        e01 = a_mat @ fwd01[k] @ a_dag
        e11 = a_mat @ fwd11[k] @ a_dag
        f00 = engine.backward_map(e00, t)
        f01 = engine.backward_map(e01, t)
        f11 = engine.backward_map(e11, t)
        g00 = b_mat @ f00 @ b_dag
        g01 = b_mat @ f01
        rho_f = np.block([[g00, g01], [dagger(g01), f11]])
        values[k] = np.trace(readout_op @ rho_f)
    md = _series_metadata(engine, grid, a=a.label, b=b.label, route="protocol")
    return DiagnosticSeries(grid=grid, values=values, kind="fotoc", metadata=md)


def corrected_f_otoc(
    engine: EvolutionEngine,
    a: LocalOperator,
    b: LocalOperator,
    rho_s0: np.ndarray,
    grid: TimeGrid,
) -> DiagnosticSeries:
    """Overlap with the probe divided by the overlap without it.

    Both the numerator and the reference run with a = identity share the same
    two map sweeps.  The ratio is taken between real parts; points where the
    reference has collapsed below the divergence tolerance are flagged
    "divergent" and reported as nan rather than amplified noise.
    """
    return corrected_f_otoc_batch(engine, [a], b, rho_s0, grid)[0]


def correlator_decomposition(
    engine: EvolutionEngine,
    a: LocalOperator,
    b: LocalOperator,
    grid: TimeGrid,
) -> tuple[DiagnosticSeries, DiagnosticSeries, DiagnosticSeries, DiagnosticSeries]:
    """Commutator correlator and its disturbance/information/otoc parts.

    All four expectations use the composite-space Heisenberg operator
    a(t) = U^dag (a x 1) U against the stationary reference state
    (1/d_S) x rho_E(0), resolving the commutator square as
    c = d + i - 2 Re f term by term.
    """
    layout = engine.model.layout
    ds, de = engine.ds, engine.de
    a_mat = embed(a, layout, scope="system")
    b_mat = embed(b, layout, scope="system")
    eye_e = np.eye(de, dtype=np.complex128)
    big_a = kron(a_mat, eye_e)
    big_b = kron(b_mat, eye_e)
    big_b_dag = dagger(big_b)
    bb = big_b_dag @ big_b
    rho_bar = kron(np.eye(ds, dtype=np.complex128) / ds, engine.model.rho_e0)
    times = grid.times()
    vals = {key: np.empty(len(times), dtype=np.complex128) for key in ("c", "d", "i", "f")}
    for k, t in enumerate(times):
        u = engine.propagator("forward", t)
        a_t = dagger(u) @ big_a @ u
        a_t_dag = dagger(a_t)
        comm = a_t @ big_b - big_b @ a_t
        # rho_bar is hermitian, so Tr[rho_bar m] = vdot(rho_bar, m).
        vals["c"][k] = np.vdot(rho_bar, dagger(comm) @ comm)
        vals["d"][k] = np.vdot(rho_bar, big_b_dag @ (a_t_dag @ a_t) @ big_b)
        vals["i"][k] = np.vdot(rho_bar, a_t_dag @ bb @ a_t)
        vals["f"][k] = np.vdot(rho_bar, a_t_dag @ big_b_dag @ a_t @ big_b)
    out = []
    for key in ("c", "d", "i", "f"):
        md = _series_metadata(engine, grid, a=a.label, b=b.label, part=key)
        out.append(
            DiagnosticSeries(grid=grid, values=vals[key], kind=f"correlator_{key}", metadata=md)
        )
    return tuple(out)


def loschmidt_echo(
    engine: EvolutionEngine,
    rho_s0: np.ndarray,
    rho_e0: np.ndarray,
    grid: TimeGrid,
    normalize: bool = True,
    state_label: str | None = None,
) -> DiagnosticSeries:
    """Overlap of the initial system state with its forward-backward image.

    The composite state rho_S x rho_E is pushed through the forward and then
    the backward propagator in one piece, the environment is traced out, and
    the result is compared against rho_S.  With ``normalize`` the overlap is
    divided by Tr[rho_S^2] so a perfect echo reads 1 for mixed initial states
    too.
    """
    rho_s = _require_density(rho_s0, engine.ds, "rho_s0")
    rho_e = np.ascontiguousarray(_require_density(rho_e0, engine.de, "rho_e0"))
    times = grid.times()
    ds, de = engine.ds, engine.de
    sdf, sdb = engine.sd_forward, engine.sd_backward
    vfh = dagger(sdf.vectors)
    # U_b(t) U_f(t) = V_b D_b(t) [V_b^dag V_f] D_f(t) V_f^dag; the bracketed
    # product is time independent.
    k_mat = dagger(sdb.vectors) @ sdf.vectors
    purity = float(np.trace(rho_s @ rho_s).real)
    values = np.empty(len(times), dtype=np.complex128)
    for idx, t in enumerate(times):
        u_b = np.exp(-1j * sdb.values * t)
        u_f = np.exp(-1j * sdf.values * t)
        x = sdb.vectors @ ((u_b[:, None] * k_mat) * u_f[None, :]) @ vfh
        xr = _product_mult_right(x, rho_s, rho_e, ds, de)
        px = _sys_mult_left(rho_s, x, ds, de)
        # Tr[(rho_S x 1) X rho0 X^dag] contracts to an elementwise overlap of
        # the two half-products because rho0 is hermitian.
        val = np.vdot(xr, px)
        values[idx] = val / purity if normalize else val
    md = _series_metadata(
        engine, grid, initial_state=state_label, normalize=normalize, purity=purity
    )
    return DiagnosticSeries(grid=grid, values=values, kind="loschmidt", metadata=md)


def commutator_growth_batch(
    engine: EvolutionEngine,
    a_ops: Sequence[LocalOperator],
    b: LocalOperator,
    grid: TimeGrid,
) -> list[DiagnosticSeries]:
    """Spectral norm of [a_j(t), b] for a family of probes sharing each U(t)."""
    layout = engine.model.layout
    a_mats = [embed(op, layout, scope="system") for op in a_ops]
    b_mat = embed(b, layout, scope="system")
    times = grid.times()
    heis = engine.heisenberg_series_batch(a_mats, times)
    out = []
    for j, op in enumerate(a_ops):
        values = np.array(
            [spectral_norm(heis[j, k] @ b_mat - b_mat @ heis[j, k]) for k in range(len(times))],
            dtype=np.complex128,
        )
        md = _series_metadata(engine, grid, a=op.label, b=b.label)
        out.append(
            DiagnosticSeries(grid=grid, values=values, kind="commutator_norm", metadata=md)
        )
    return out


def commutator_growth(
    engine: EvolutionEngine,
    a: LocalOperator,
    b: LocalOperator,
    grid: TimeGrid,
) -> DiagnosticSeries:
    return commutator_growth_batch(engine, [a], b, grid)[0]


def light_cone_fit(
    series_by_distance: Iterable[tuple[float, DiagnosticSeries]],
    threshold_fraction: float = LIGHT_CONE_THRESHOLD,
) -> LightConeFit:
    """Arrival onsets per distance plus a linear distance-vs-onset fit.

    The onset of one series is the first time its real part exceeds
    ``threshold_fraction`` of that series' own maximum, located by linear
    interpolation between grid points.  Series that never cross report +inf
    and are excluded from the velocity fit; a fit without spread in the
    onsets is flagged degenerate instead of inventing a slope.
    """
    entries = sorted(series_by_distance, key=lambda item: item[0])
    if len(entries) < 2:
        raise ConfigError("config error: light-cone fit needs at least two distances")
    if not 0.0 < threshold_fraction < 1.0:
        raise ConfigError("config error: threshold fraction must lie in (0, 1)")
    distances: list[float] = []
    onsets: list[float] = []
    flags: list[str] = []
    for dist, series in entries:
        distances.append(float(dist))
        t = series.times
        vals = series.values.real
        peak = float(vals.max())
        threshold = threshold_fraction * peak
        onset = math.inf
        if peak > 0.0:
            above = np.nonzero(vals > threshold)[0]
            if above.size:
                k = int(above[0])
                if k == 0:
                    onset = float(t[0])
                else:
                    frac = (threshold - vals[k - 1]) / (vals[k] - vals[k - 1])
                    onset = float(t[k - 1] + frac * (t[k] - t[k - 1]))
        if not math.isfinite(onset):
            flags.append(f"no-crossing:d={dist:g}")
        onsets.append(onset)

    finite = [i for i in range(len(onsets)) if math.isfinite(onsets[i])]
    velocity = math.nan
    r_squared = math.nan
    if len(finite) < 2:
        flags.append("insufficient-onsets")
    else:
        x = np.array([onsets[i] for i in finite])
        y = np.array([distances[i] for i in finite])
        if float(np.ptp(x)) == 0.0:
            flags.append("degenerate-onsets")
        else:
            slope, intercept = np.polyfit(x, y, 1)
            predicted = slope * x + intercept
            ss_res = float(np.sum((y - predicted) ** 2))
            ss_tot = float(np.sum((y - np.mean(y)) ** 2))
            velocity = float(slope)
            if ss_tot > 0.0:
                r_squared = 1.0 - ss_res / ss_tot
            else:
                flags.append("degenerate-distances")
    monotone = all(onsets[i + 1] > onsets[i] for i in range(len(onsets) - 1))
    return LightConeFit(
        distances=tuple(distances),
        onset_times=tuple(onsets),
        threshold=threshold_fraction,
        velocity=velocity,
        r_squared=r_squared,
        monotone_onsets=monotone,
        flags=tuple(flags),
    )


def blp_trace_distance(
    engine: EvolutionEngine,
    rho1: np.ndarray,
    rho2: np.ndarray,
    grid: TimeGrid,
) -> DiagnosticSeries:
    """Trace distance between the reduced images of two initial system states.

    The reduced map is linear, so the difference state is evolved once.
    Strict increases beyond the witness tolerance are recorded as backflow
    events in the metadata (a monotone decrease is the memoryless signature).
    """
    r1 = _require_density(rho1, engine.ds, "rho1")
    r2 = _require_density(rho2, engine.ds, "rho2")
    times = grid.times()
    mapped = engine.map_series("forward", r1 - r2, times)
    values = np.array(
        [0.5 * trace_norm(mapped[k]) for k in range(len(times))], dtype=np.complex128
    )
    events = []
    real = values.real
    for k in range(1, len(times)):
        increase = float(real[k] - real[k - 1])
        if increase > WITNESS_INCREASE:
            events.append({"index": k, "time": float(times[k]), "increase": increase})
    md = _series_metadata(engine, grid)
    md["witness_events"] = events
    md["n_witness_events"] = len(events)
    return DiagnosticSeries(grid=grid, values=values, kind="blp", metadata=md)
