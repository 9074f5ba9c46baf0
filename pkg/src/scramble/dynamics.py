"""Forward/backward composite propagators and the reduced-dynamics maps:
state maps, their adjoints, and Heisenberg-picture operators.

All maps are anchored at t = 0 with the model's initial environment state;
whole-interval evolution is never composed from shorter segments, since the
reduced dynamics is generally non-Markovian.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import LayoutError
from .linalg import SpectralDecomposition, as_operator, dagger, evolve_unitary, herm_eig, kron
from .models import ModelInstance, PerturbationSpec


def _run_indexed(n: int, workers: int, task) -> None:
    """Run task(k) for every k in range(n), optionally on a thread pool.

    Each task writes only its own output slot, so scheduling cannot change
    the result: parallel and serial runs are bit-identical.  Chunks are
    contiguous purely to cut executor overhead.
    """
    if workers <= 1 or n <= 1:
        for k in range(n):
            task(k)
        return

    chunk = math.ceil(n / workers)

    def run_chunk(start: int) -> None:
        for k in range(start, min(start + chunk, n)):
            task(k)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run_chunk, range(0, n, chunk)))


def _trace_env_product(a: np.ndarray, b: np.ndarray, ds: int, de: int) -> np.ndarray:
    """Tr_E[a @ b] for (system x env)-ordered matrices without forming a @ b."""
    d = ds * de
    # C[i,j] = sum_{k,m} a[(i,k),m] b[m,(j,k)]: batch one small matmul per env index
    a3 = np.ascontiguousarray(a.reshape(ds, de, d).transpose(1, 0, 2))
    b3 = np.ascontiguousarray(b.reshape(d, ds, de).transpose(2, 0, 1))
    return np.matmul(a3, b3).sum(axis=0)


def _env_mult_left(rho_e: np.ndarray, x: np.ndarray, ds: int, de: int) -> np.ndarray:
    """(I_S x rho_e) @ x."""
    x3 = x.reshape(ds, de, x.shape[1])
    return np.matmul(rho_e, x3).reshape(x.shape)


def _sys_mult_left(a_s: np.ndarray, x: np.ndarray, ds: int, de: int) -> np.ndarray:
    """(a_s x I_E) @ x."""
    x2 = x.reshape(ds, de * x.shape[1])
    return (a_s @ x2).reshape(x.shape)


def _product_mult_right(
    x: np.ndarray, m_s: np.ndarray, m_e: np.ndarray, ds: int, de: int
) -> np.ndarray:
    """x @ (m_s x m_e)."""
    d = x.shape[0]
    x3 = x.reshape(d, ds, de)
    t1 = np.matmul(x3, m_e)
    t2 = np.matmul(t1.transpose(0, 2, 1), m_s)
    return np.ascontiguousarray(t2.transpose(0, 2, 1)).reshape(d, ds * de)


class EvolutionEngine:
    """Spectral propagators for one model plus the reduced maps built on them.

    Immutable after construction; map evaluations at distinct times are
    independent, deterministic, and safe to run concurrently.
    """

    def __init__(
        self,
        model: ModelInstance,
        delta: np.ndarray | None = None,
        perturbation: PerturbationSpec | None = None,
        workers: int = 1,
    ):
        layout = model.layout
        self.model = model
        # Record of how ``delta`` was built, echoed into series metadata only.
        self.perturbation = perturbation
        self.workers = max(1, int(workers))
        self.ds = layout.system_dim
        self.de = layout.env_dim
        self.dim = layout.dim
        if delta is None:
            delta = np.zeros((self.dim, self.dim), dtype=np.complex128)
        else:
            delta = as_operator(delta)
            if delta.shape[0] != self.dim:
                raise LayoutError(
                    f"layout error: perturbation dim {delta.shape[0]} != composite {self.dim}"
                )
            self._require_env_local(delta, layout)
        self.delta = delta
        self.sd_forward: SpectralDecomposition = herm_eig(model.h_forward)
        self.sd_backward: SpectralDecomposition = herm_eig(
            -(model.h_system + delta) + model.h_env + model.h_int
        )
        self._rho_e = np.ascontiguousarray(model.rho_e0)
        self._env_v_cache: dict[str, np.ndarray] = {}

    @staticmethod
    def _require_env_local(delta: np.ndarray, layout) -> None:
        from .linalg import partial_trace

        reduced = partial_trace(delta, layout.dims, keep=tuple(range(layout.system_count)))
        rebuilt = kron(reduced / layout.env_dim, np.eye(layout.env_dim, dtype=np.complex128))
        if np.max(np.abs(rebuilt - delta)) > 1e-10:
            raise LayoutError("layout error: perturbation must act as identity on the environment")

    def _sd(self, direction: str) -> SpectralDecomposition:
        if direction == "forward":
            return self.sd_forward
        if direction == "backward":
            return self.sd_backward
        raise LayoutError(f"layout error: unknown direction {direction!r}")

    def _env_v(self, direction: str) -> np.ndarray:
        """(I_S x rho_E(0)) V for the chosen direction, cached."""
        cached = self._env_v_cache.get(direction)
        if cached is None:
            v = self._sd(direction).vectors
            cached = _env_mult_left(self._rho_e, v, self.ds, self.de)
            self._env_v_cache[direction] = cached
        return cached

    def _check_system_operand(self, x_s: np.ndarray) -> np.ndarray:
        x_s = as_operator(x_s)
        if x_s.shape[0] != self.ds:
            raise LayoutError(
                f"layout error: operand dim {x_s.shape[0]} != system dim {self.ds}"
            )
        return x_s

    # -- state maps -----------------------------------------------------------

    def map_series(self, direction: str, x_s: np.ndarray, times) -> np.ndarray:
        """Tr_E[U(t) (x_s x rho_E(0)) U(t)^dag] for each t; shape (n_t, ds, ds)."""
        x_s = self._check_system_operand(x_s)
        sd = self._sd(direction)
        v = sd.vectors
        vh = dagger(v)
        w = _product_mult_right(vh, x_s, self._rho_e, self.ds, self.de) @ v
        t_list = [float(t) for t in times]
        out = np.empty((len(t_list), self.ds, self.ds), dtype=np.complex128)

        def fill(k: int) -> None:
            if t_list[k] == 0.0:
                # t = 0 is the identity channel; return the operand exactly
                out[k] = x_s
                return
            u = np.exp(-1j * sd.values * t_list[k])
            inner = (u[:, None] * w) * u.conj()[None, :]
            out[k] = _trace_env_product(v @ inner, vh, self.ds, self.de)

        _run_indexed(len(t_list), self.workers, fill)
        return out

    def forward_map(self, x_s: np.ndarray, t: float) -> np.ndarray:
        return self.map_series("forward", x_s, [t])[0]

    def backward_map(self, x_s: np.ndarray, t: float) -> np.ndarray:
        return self.map_series("backward", x_s, [t])[0]

    # -- adjoint (observable) maps --------------------------------------------

    def adjoint_map_series(self, direction: str, a_s: np.ndarray, times) -> np.ndarray:
        """Tr_E[(I_S x rho_E(0)) U(t)^dag (a_s x I_E) U(t)] for each t."""
        a_s = self._check_system_operand(a_s)
        sd = self._sd(direction)
        v = sd.vectors
        vh = dagger(v)
        w = vh @ _sys_mult_left(a_s, v, self.ds, self.de)
        v_rho = self._env_v(direction)
        t_list = [float(t) for t in times]
        out = np.empty((len(t_list), self.ds, self.ds), dtype=np.complex128)

        def fill(k: int) -> None:
            if t_list[k] == 0.0:
                out[k] = a_s
                return
            u = np.exp(-1j * sd.values * t_list[k])
            inner = (u.conj()[:, None] * w) * u[None, :]
            out[k] = _trace_env_product(v_rho @ inner, vh, self.ds, self.de)

        _run_indexed(len(t_list), self.workers, fill)
        return out

    def adjoint_map(self, direction: str, a_s: np.ndarray, t: float) -> np.ndarray:
        return self.adjoint_map_series(direction, a_s, [t])[0]

    def heisenberg_operator(self, a_s: np.ndarray, t: float) -> np.ndarray:
        """Forward-adjoint image of a_s: the open-system A_S(t)."""
        return self.adjoint_map("forward", a_s, t)

    def heisenberg_series(self, a_s: np.ndarray, times) -> np.ndarray:
        return self.adjoint_map_series("forward", a_s, times)

    def heisenberg_series_batch(self, a_list: list[np.ndarray], times) -> np.ndarray:
        """Forward-adjoint images of several operators, sharing one U(t) per t.

        Returns shape (n_ops, n_t, ds, ds); agrees with heisenberg_series on
        each operator.
        """
        ops = [self._check_system_operand(a) for a in a_list]
        sd = self.sd_forward
        t_list = [float(t) for t in times]
        out = np.empty((len(ops), len(t_list), self.ds, self.ds), dtype=np.complex128)

        def fill(k: int) -> None:
            if t_list[k] == 0.0:
                for j, a_s in enumerate(ops):
                    out[j, k] = a_s
                return
            u_t = evolve_unitary(sd, t_list[k])
            left = _env_mult_left(self._rho_e, dagger(u_t), self.ds, self.de)
            for j, a_s in enumerate(ops):
                right = _sys_mult_left(a_s, u_t, self.ds, self.de)
                out[j, k] = _trace_env_product(left, right, self.ds, self.de)

        _run_indexed(len(t_list), self.workers, fill)
        return out

    # -- composite propagators -------------------------------------------------

    def propagator(self, direction: str, t: float) -> np.ndarray:
        """Full composite-space unitary e^{-i H t} for the chosen direction."""
        return evolve_unitary(self._sd(direction), float(t))
