"""Dense complex linear algebra for small Hilbert spaces.

Operators are plain numpy arrays with dtype complex128. Matrix exponentials of
Hermitian generators go exclusively through cached spectral decompositions
(herm_eig + evolve_unitary); nothing in the package calls a Pade-style expm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, max_dim
from .errors import (
    InvalidTemperatureError,
    LayoutError,
    NotHermitianError,
    SpaceTooLargeError,
)


def as_operator(m: np.ndarray) -> np.ndarray:
    """Coerce to a square complex128 array."""
    out = np.asarray(m, dtype=np.complex128)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise LayoutError(f"layout error: expected a square matrix, got shape {out.shape}")
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOLERANCES.hermiticity) -> bool:
    m = as_operator(m)
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


def is_unitary(m: np.ndarray, tol: float = DEFAULT_TOLERANCES.unitarity) -> bool:
    m = as_operator(m)
    eye = np.eye(m.shape[0])
    return bool(np.max(np.abs(dagger(m) @ m - eye)) <= tol)


def is_psd(m: np.ndarray, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    """Hermitian with no eigenvalue below -tol."""
    m = as_operator(m)
    if not is_hermitian(m, tol=math.sqrt(tol)):
        return False
    eigs = np.linalg.eigvalsh((m + dagger(m)) / 2.0)
    return bool(eigs.min() >= -tol)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with the global dimension guard."""
    a = as_operator(a)
    b = as_operator(b)
    dim = a.shape[0] * b.shape[0]
    limit = max_dim()
    if dim > limit:
        raise SpaceTooLargeError(
            f"space too large: kron would produce dimension {dim} > {limit}"
        )
    return np.kron(a, b)


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    ``dims`` lists the factor dimensions in tensor order; ``keep`` holds the
    indices of the factors that survive, and the result keeps them in their
    original order. Trace is preserved: Tr(result) == Tr(m).
    """
    m = as_operator(m)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise LayoutError(f"layout error: factor dimensions must be positive, got {dims}")
    total = math.prod(dims)
    if m.shape[0] != total:
        raise LayoutError(
            f"layout error: matrix dimension {m.shape[0]} != product of factors {total}"
        )
    keep = tuple(sorted(set(int(i) for i in keep)))
    if not keep:
        raise LayoutError("layout error: keep set is empty")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise LayoutError(f"layout error: keep indices {keep} outside layout of {len(dims)} factors")

    k = len(dims)
    tensor = m.reshape(dims + dims)
    row_labels = list(range(k))
    col_labels = [k + i if i in keep else i for i in range(k)]
    out_labels = [i for i in keep] + [k + i for i in keep]
    reduced = np.einsum(tensor, row_labels + col_labels, out_labels)
    d_keep = math.prod(dims[i] for i in keep)
    return np.ascontiguousarray(reduced.reshape(d_keep, d_keep))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition of a Hermitian matrix.

    ``values`` are real and ascending; ``vectors`` holds the matching
    orthonormal eigenvectors as columns, each with its first nonzero entry
    phased to be real and positive so repeated runs agree bit for bit.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values[None, :]) @ dagger(self.vectors)


def _fix_column_phases(vectors: np.ndarray, tol: float) -> np.ndarray:
    absv = np.abs(vectors)
    first = np.argmax(absv > tol, axis=0)
    anchors = vectors[first, np.arange(vectors.shape[1])]
    phases = anchors / np.abs(anchors)
    return vectors / phases[None, :]


def herm_eig(h: np.ndarray, tol: float = DEFAULT_TOLERANCES.hermiticity) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix.

    Input must be Hermitian within ``tol``; it is symmetrized before the solve
    so the decomposition is exactly self-adjoint.
    """
    h = as_operator(h)
    defect = float(np.max(np.abs(h - dagger(h))))
    if defect > tol:
        raise NotHermitianError(f"not Hermitian: max |h - h^dag| = {defect:.3e} > {tol:.1e}")
    sym = (h + dagger(h)) / 2.0
    values, vectors = np.linalg.eigh(sym)
    vectors = _fix_column_phases(np.ascontiguousarray(vectors), DEFAULT_TOLERANCES.zero_entry)
    return SpectralDecomposition(values=values, vectors=np.ascontiguousarray(vectors))


def evolve_unitary(sd: SpectralDecomposition, t: float) -> np.ndarray:
    """Propagator exp(-i h t) from a cached decomposition of h."""
    if t == 0.0:
        # exact identity; the reconstruction v v^dag would carry rounding noise
        return np.eye(sd.vectors.shape[0], dtype=np.complex128)
    phases = np.exp(-1j * t * sd.values)
    return (sd.vectors * phases[None, :]) @ dagger(sd.vectors)


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    m = as_operator(m)
    return float(np.linalg.svd(m, compute_uv=False)[0])


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = as_operator(m)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def thermal_state(h: np.ndarray, temperature: float) -> np.ndarray:
    """Gibbs state exp(-h/T) / Tr exp(-h/T) of a Hermitian generator.

    Weights are shifted by the ground energy before exponentiation so low
    temperatures stay finite.
    """
    if not temperature > 0:
        raise InvalidTemperatureError(f"invalid temperature: {temperature} (must be > 0)")
    sd = herm_eig(h)
    weights = np.exp(-(sd.values - sd.values[0]) / temperature)
    weights /= weights.sum()
    rho = (sd.vectors * weights[None, :]) @ dagger(sd.vectors)
    return (rho + dagger(rho)) / 2.0
