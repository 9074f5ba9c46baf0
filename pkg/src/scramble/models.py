"""Model builders: spin-chain-in-cavity and tilted-field Ising instances,
backward-evolution perturbations, and the named initial-state family."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PerturbationMismatchError
from .hilbert import LocalOperator, SpaceLayout, basis_ket, embed, product_state, spin_op
from .linalg import thermal_state
from . import hilbert

# Default single-qubit ket (sqrt(3)/2, 1/2), used by both models.
PSI0 = np.array([math.sqrt(3.0) / 2.0, 0.5], dtype=np.complex128)

PERTURBATION_KINDS = ("none", "delta1", "delta2", "delta3", "tc_sigma_z")
INITIAL_STATE_NAMES = ("rho1", "rho2", "rho3", "rho4", "rho5", "plus", "minus")


@dataclass(frozen=True)
class TCSpec:
    """Parameters of the collective spin-cavity model."""

    n_atoms: int = 4
    omega0: float = 2.0
    omega_c: float = 2.0
    lam: float = 2.0  # collective coupling; per-atom strength is lam / (2 sqrt(N))
    j_s: float = 0.0
    temperature: float = 10.0
    fock_cutoff: int = 30

    def __post_init__(self) -> None:
        if self.n_atoms < 1:
            raise ConfigError(f"config error: n_atoms must be >= 1, got {self.n_atoms}")
        if self.fock_cutoff < 2:
            raise ConfigError(f"config error: fock_cutoff must be >= 2, got {self.fock_cutoff}")
        if self.temperature <= 0:
            raise ConfigError(
                f"config error: temperature must be > 0, got {self.temperature}"
            )


@dataclass(frozen=True)
class TFIMSpec:
    """Parameters of the tilted-field Ising chain coupled to an Ising-chain bath."""

    b_field: float = 0.5
    j_coupling: float = 0.8
    theta: float = math.pi / 2.0
    n_system: int = 4
    n_bath: int = 4

    def __post_init__(self) -> None:
        if self.n_system < 1 or self.n_bath < 1:
            raise ConfigError(
                f"config error: n_system and n_bath must be >= 1, "
                f"got {self.n_system}, {self.n_bath}"
            )


@dataclass(frozen=True)
class PerturbationSpec:
    """Additive system perturbation applied to the backward Hamiltonian.

    ``site`` restricts the perturbation to one system spin; by default it sums
    over all of them.
    """

    kind: str = "none"
    omega_d: float = 0.0
    site: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in PERTURBATION_KINDS:
            raise ConfigError(
                f"config error: unknown perturbation kind {self.kind!r}, "
                f"expected one of {PERTURBATION_KINDS}"
            )
        if self.omega_d < 0:
            raise ConfigError(f"config error: omega_d must be >= 0, got {self.omega_d}")


@dataclass(frozen=True, eq=False)
class ModelInstance:
    """A built model: composite-space Hamiltonian pieces plus initial states."""

    layout: SpaceLayout
    h_system: np.ndarray
    h_env: np.ndarray
    h_int: np.ndarray
    rho_s0: np.ndarray
    rho_e0: np.ndarray
    spec: TCSpec | TFIMSpec

    @property
    def h_forward(self) -> np.ndarray:
        return self.h_system + self.h_env + self.h_int


def _open_chain_zz(layout: SpaceLayout, sites: range, coupling: float) -> np.ndarray:
    """Sum of coupling * sigma_z(i) sigma_z(i+1) over consecutive site pairs."""
    dim = layout.dim
    total = np.zeros((dim, dim), dtype=np.complex128)
    sz = spin_op("z")
    for i in sites[:-1]:
        zi = embed(LocalOperator(i, sz), layout)
        zj = embed(LocalOperator(i + 1, sz), layout)
        total += coupling * (zi @ zj)
    return total


def _site_field_sum(layout: SpaceLayout, sites: range, op: np.ndarray) -> np.ndarray:
    dim = layout.dim
    total = np.zeros((dim, dim), dtype=np.complex128)
    for i in sites:
        total += embed(LocalOperator(i, op), layout)
    return total


def build_tc(spec: TCSpec) -> ModelInstance:
    """Build the N-atom/single-cavity instance with the cavity as the last factor."""
    n = spec.n_atoms
    layout = SpaceLayout(dims=(2,) * n + (spec.fock_cutoff,), system_count=n)
    a, adag = hilbert.boson_ops(spec.fock_cutoff)
    number = adag @ a

    h_system = spec.omega0 * _site_field_sum(layout, range(n), spin_op("z"))
    h_system += _open_chain_zz(layout, range(n), spec.j_s)
    h_env = spec.omega_c * embed(LocalOperator(n, number), layout)

    # The atom operator paired with a must raise the sigma-z eigenvalue so that
    # the rotating-wave interaction conserves sum(sigma_z)/2 + n_photons.
    sz_raise = np.array([[0, 1], [0, 0]], dtype=np.complex128)
    sz_lower = sz_raise.conj().T
    g = spec.lam / (2.0 * math.sqrt(n))
    dim = layout.dim
    h_int = np.zeros((dim, dim), dtype=np.complex128)
    a_emb = embed(LocalOperator(n, a), layout)
    adag_emb = embed(LocalOperator(n, adag), layout)
    for i in range(n):
        h_int += g * (embed(LocalOperator(i, sz_raise), layout) @ a_emb)
        h_int += g * (embed(LocalOperator(i, sz_lower), layout) @ adag_emb)

    rho_s0 = product_state([PSI0] * n)
    rho_e0 = thermal_state(spec.omega_c * number, spec.temperature)
    return ModelInstance(
        layout=layout,
        h_system=h_system,
        h_env=h_env,
        h_int=h_int,
        rho_s0=rho_s0,
        rho_e0=rho_e0,
        spec=spec,
    )


def _tilted_field(b_field: float, theta: float) -> np.ndarray:
    return b_field * (math.sin(theta) * spin_op("x") + math.cos(theta) * spin_op("z"))


def build_tfim(
    spec: TFIMSpec,
    rho_s0: np.ndarray | None = None,
    rho_e0: np.ndarray | None = None,
) -> ModelInstance:
    """Build the tilted-field Ising instance: open system and bath chains joined
    by a single zz bond between the last system spin and the first bath spin."""
    ns, nb = spec.n_system, spec.n_bath
    layout = SpaceLayout(dims=(2,) * (ns + nb), system_count=ns)
    field = _tilted_field(spec.b_field, spec.theta)

    h_system = _site_field_sum(layout, range(ns), field)
    h_system += _open_chain_zz(layout, range(ns), spec.j_coupling)
    h_env = _site_field_sum(layout, range(ns, ns + nb), field)
    h_env += _open_chain_zz(layout, range(ns, ns + nb), spec.j_coupling)

    sz = spin_op("z")
    h_int = spec.j_coupling * (
        embed(LocalOperator(ns - 1, sz), layout) @ embed(LocalOperator(ns, sz), layout)
    )

    if rho_s0 is None:
        rho_s0 = product_state([PSI0] * ns)
    if rho_e0 is None:
        rho_e0 = product_state([PSI0] * nb)
    return ModelInstance(
        layout=layout,
        h_system=h_system,
        h_env=h_env,
        h_int=h_int,
        rho_s0=rho_s0,
        rho_e0=rho_e0,
        spec=spec,
    )


def build_perturbation(
    spec: PerturbationSpec,
    theta: float,
    layout: SpaceLayout,
    model_kind: str | None = None,
) -> np.ndarray:
    """Composite-space perturbation acting on the system factors only.

    ``model_kind`` ("tc" or "tfim"), when given, rejects kinds that do not
    belong to that model.
    """
    if model_kind is not None:
        tc_kinds = ("none", "tc_sigma_z")
        tfim_kinds = ("none", "delta1", "delta2", "delta3")
        allowed = tc_kinds if model_kind == "tc" else tfim_kinds
        if spec.kind not in allowed:
            raise PerturbationMismatchError(
                f"perturbation mismatch: kind {spec.kind!r} is not valid for "
                f"model {model_kind!r}"
            )

    dim = layout.dim
    if spec.kind == "none" or spec.omega_d == 0.0:
        return np.zeros((dim, dim), dtype=np.complex128)

    if spec.kind == "delta1":
        per_site = math.sin(theta) * spin_op("x") + math.cos(theta) * spin_op("z")
    elif spec.kind == "delta2":
        per_site = spin_op("x") + spin_op("z")
    elif spec.kind == "delta3":
        per_site = spin_op("x")
    else:  # tc_sigma_z
        per_site = spin_op("z")

    if spec.site is not None:
        if not 0 <= spec.site < layout.system_count:
            raise ConfigError(
                f"config error: perturbation site {spec.site} outside system "
                f"range 0..{layout.system_count - 1}"
            )
        sites = range(spec.site, spec.site + 1)
    else:
        sites = range(layout.system_count)
    return spec.omega_d * _site_field_sum(layout, sites, per_site)


def named_initial_state(name: str, n_sites: int) -> np.ndarray:
    """One of the named n-qubit product states used for echo and trace-distance
    sweeps; "plus"/"minus" are the |+> and |-> product states ("plus" = rho3)."""
    if name not in INITIAL_STATE_NAMES:
        raise ConfigError(
            f"config error: unknown initial state {name!r}, "
            f"expected one of {INITIAL_STATE_NAMES}"
        )
    inv = 1.0 / math.sqrt(2.0)
    if name == "rho1":
        return product_state([PSI0] * n_sites)
    if name == "rho2":
        return np.eye(2**n_sites, dtype=np.complex128) / 2**n_sites
    if name in ("rho3", "plus"):
        ket = np.array([inv, inv], dtype=np.complex128)
        return product_state([ket] * n_sites)
    if name == "rho4":
        return product_state([basis_ket(2, 0)] * n_sites)
    if name == "rho5":
        return product_state([basis_ket(2, 1)] * n_sites)
    ket = np.array([inv, -inv], dtype=np.complex128)
    return product_state([ket] * n_sites)


def thermal_tail_weight(omega_c: float, cutoff: int, temperature: float) -> float:
    """Occupation weight beyond the truncation for the untruncated thermal
    cavity state: exp(-omega_c * cutoff / T)."""
    return math.exp(-omega_c * cutoff / temperature)
