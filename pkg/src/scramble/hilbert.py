"""Composite-space bookkeeping: subsystem layouts, local-operator embedding,
spin and truncated-boson primitives, and product-state builders."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import BadSiteError, LayoutError, NotNormalizedError, SpaceTooLargeError
from .linalg import as_operator, kron
from . import config


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factorization with a system/environment split.

    The first ``system_count`` factors form the system S; the remaining
    factors form the environment E.
    """

    dims: tuple[int, ...]
    system_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or any(d < 1 for d in self.dims):
            raise LayoutError(f"layout error: factor dimensions must be positive, got {self.dims}")
        if not 1 <= self.system_count <= len(self.dims):
            raise LayoutError(
                f"layout error: system_count {self.system_count} outside 1..{len(self.dims)}"
            )
        total = math.prod(self.dims)
        limit = config.max_dim()
        if total > limit:
            raise SpaceTooLargeError(f"space too large: total dimension {total} exceeds {limit}")

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def system_dims(self) -> tuple[int, ...]:
        return self.dims[: self.system_count]

    @property
    def env_dims(self) -> tuple[int, ...]:
        return self.dims[self.system_count :]

    @property
    def system_dim(self) -> int:
        return math.prod(self.system_dims)

    @property
    def env_dim(self) -> int:
        return math.prod(self.env_dims) if self.env_dims else 1


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """A single-factor operator tagged with the factor index it acts on."""

    site: int
    op: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "op", as_operator(self.op))
        if not self.label:
            object.__setattr__(self, "label", f"op@{self.site}")


_SPIN_OPS = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    # ladder convention: plus = |1><0| in the {|0>, |1>} basis with |0> the
    # sigma-z +1 eigenstate
    "plus": np.array([[0, 0], [1, 0]], dtype=np.complex128),
    "minus": np.array([[0, 1], [0, 0]], dtype=np.complex128),
    "id": np.eye(2, dtype=np.complex128),
}


def spin_op(kind: str) -> np.ndarray:
    """Return a 2x2 Pauli or ladder matrix: one of x, y, z, plus, minus, id."""
    key = kind.removeprefix("sigma_")
    if key not in _SPIN_OPS:
        raise LayoutError(f"layout error: unknown spin operator kind {kind!r}")
    return _SPIN_OPS[key].copy()


def boson_ops(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated harmonic-ladder pair (a, a_dagger) with a|n> = sqrt(n)|n-1>."""
    if cutoff < 2:
        raise LayoutError(f"layout error: fock cutoff must be >= 2, got {cutoff}")
    a = np.zeros((cutoff, cutoff), dtype=np.complex128)
    ns = np.arange(1, cutoff)
    a[ns - 1, ns] = np.sqrt(ns)
    return a, a.conj().T


def embed(local: LocalOperator, layout: SpaceLayout, scope: str = "composite") -> np.ndarray:
    """Embed a local operator as I x ... x op x ... x I over the scope's factors.

    scope "system" spans only the system factors; "composite" spans all of them.
    """
    if scope == "system":
        dims = layout.system_dims
    elif scope == "composite":
        dims = layout.dims
    else:
        raise LayoutError(f"layout error: unknown embed scope {scope!r}")
    if not 0 <= local.site < len(dims):
        raise BadSiteError(
            f"bad site: {local.site} outside factor range 0..{len(dims) - 1} for scope {scope!r}"
        )
    if local.op.shape[0] != dims[local.site]:
        raise LayoutError(
            f"layout error: operator dim {local.op.shape[0]} does not match "
            f"factor dim {dims[local.site]} at site {local.site}"
        )
    before = math.prod(dims[: local.site]) if local.site else 1
    after = math.prod(dims[local.site + 1 :]) if local.site + 1 < len(dims) else 1
    out = local.op
    if before > 1:
        out = kron(np.eye(before, dtype=np.complex128), out)
    if after > 1:
        out = kron(out, np.eye(after, dtype=np.complex128))
    return out


def basis_ket(dim: int, index: int) -> np.ndarray:
    """Computational-basis column vector |index> in a dim-dimensional factor."""
    if not 0 <= index < dim:
        raise BadSiteError(f"bad site: basis index {index} outside 0..{dim - 1}")
    ket = np.zeros(dim, dtype=np.complex128)
    ket[index] = 1.0
    return ket


def product_ket(single_site_kets: list[np.ndarray]) -> np.ndarray:
    """Tensor product of normalized single-factor kets."""
    if not single_site_kets:
        raise LayoutError("layout error: product state needs at least one ket")
    kets = []
    for k, ket in enumerate(single_site_kets):
        vec = np.asarray(ket, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > DEFAULT_TOLERANCES.normalization:
            raise NotNormalizedError(f"not normalized: ket {k} has norm {norm!r}")
        kets.append(vec)
    return reduce(np.kron, kets)


def product_state(single_site_kets: list[np.ndarray]) -> np.ndarray:
    """Density matrix of the pure tensor-product state of the given kets."""
    psi = product_ket(single_site_kets)
    return np.outer(psi, psi.conj())
