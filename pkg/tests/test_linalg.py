import numpy as np
import pytest

from scramble import linalg
from scramble.errors import (
    InvalidTemperatureError,
    LayoutError,
    NotHermitianError,
    SpaceTooLargeError,
)

from oracles import (
    kron_oracle,
    partial_trace_oracle,
    power_iteration_norm,
    random_density,
    random_hermitian,
    random_unitary,
    trace_norm_hermitian_oracle,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class TestKron:
    def test_pauli_pair_explicit(self):
        expected = np.array(
            [
                [0, 0, 1, 0],
                [0, 0, 0, -1],
                [1, 0, 0, 0],
                [0, -1, 0, 0],
            ],
            dtype=complex,
        )
        assert np.array_equal(linalg.kron(SX, SZ), expected)

    def test_matches_quadruple_loop_oracle(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert np.allclose(linalg.kron(a, b), kron_oracle(a, b), atol=1e-14)

    def test_mixed_product_rule(self):
        rng = np.random.default_rng(12)
        a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
        left = linalg.kron(a, b) @ linalg.kron(c, d)
        right = linalg.kron(a @ c, b @ d)
        assert np.allclose(left, right, atol=1e-13)

    def test_dimension_guard(self, monkeypatch):
        monkeypatch.setenv("SCRAMBLE_MAX_DIM", "8")
        a = np.eye(4)
        with pytest.raises(SpaceTooLargeError, match="space too large"):
            linalg.kron(a, a)

    def test_guard_env_override_allows(self, monkeypatch):
        monkeypatch.setenv("SCRAMBLE_MAX_DIM", "16")
        a = np.eye(4)
        assert linalg.kron(a, a).shape == (16, 16)


class TestPartialTrace:
    def test_product_state_factorizes(self):
        rng = np.random.default_rng(21)
        rho_a = random_density(rng, 3)
        rho_b = random_density(rng, 4)
        joint = linalg.kron(rho_a, rho_b)
        assert np.allclose(linalg.partial_trace(joint, (3, 4), keep=(0,)), rho_a, atol=1e-13)
        assert np.allclose(linalg.partial_trace(joint, (3, 4), keep=(1,)), rho_b, atol=1e-13)

    def test_matches_index_sum_oracle_nonadjacent_keep(self):
        rng = np.random.default_rng(22)
        m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        got = linalg.partial_trace(m, (2, 2, 2), keep=(0, 2))
        want = partial_trace_oracle(m, (2, 2, 2), keep=(0, 2))
        assert np.allclose(got, want, atol=1e-14)

    def test_matches_oracle_mixed_dims(self):
        rng = np.random.default_rng(23)
        dims = (2, 3, 2)
        n = 12
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        for keep in [(0,), (1,), (2,), (0, 1), (1, 2), (0, 2)]:
            got = linalg.partial_trace(m, dims, keep=keep)
            want = partial_trace_oracle(m, dims, keep=keep)
            assert np.allclose(got, want, atol=1e-13), keep

    def test_preserves_trace_and_linearity(self):
        rng = np.random.default_rng(24)
        a = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
        b = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
        dims = (3, 4)
        assert np.isclose(np.trace(linalg.partial_trace(a, dims, (0,))), np.trace(a), atol=1e-13)
        lhs = linalg.partial_trace(2.0 * a + 1j * b, dims, (1,))
        rhs = 2.0 * linalg.partial_trace(a, dims, (1,)) + 1j * linalg.partial_trace(b, dims, (1,))
        assert np.allclose(lhs, rhs, atol=1e-13)

    def test_rejects_bad_layout(self):
        with pytest.raises(LayoutError, match="layout error"):
            linalg.partial_trace(np.eye(6), (2, 2), keep=(0,))
        with pytest.raises(LayoutError, match="layout error"):
            linalg.partial_trace(np.eye(4), (2, 2), keep=(3,))


class TestHermEig:
    def test_diagonal_matrix_sorted(self):
        sd = linalg.herm_eig(np.diag([3.0, -1.0, 2.0]).astype(complex))
        assert np.allclose(sd.values, [-1.0, 2.0, 3.0])
        # columns are the matching standard basis vectors, phase fixed positive
        assert np.allclose(np.abs(sd.vectors), np.eye(3)[:, [1, 2, 0]])

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(31)
        h = random_hermitian(rng, 64)
        sd = linalg.herm_eig(h)
        residual = np.max(np.abs(sd.reconstruct() - h))
        assert residual <= 1e-10 * 64

    def test_values_ascending_vectors_unitary(self):
        rng = np.random.default_rng(32)
        sd = linalg.herm_eig(random_hermitian(rng, 40))
        assert np.all(np.diff(sd.values) >= -1e-12)
        assert linalg.is_unitary(sd.vectors, tol=1e-10)

    def test_phase_convention_first_nonzero_real_positive(self):
        rng = np.random.default_rng(33)
        sd = linalg.herm_eig(random_hermitian(rng, 17))
        for k in range(17):
            col = sd.vectors[:, k]
            first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert abs(first.imag) < 1e-12 and first.real > 0

    def test_rejects_non_hermitian(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        with pytest.raises(NotHermitianError, match="not Hermitian"):
            linalg.herm_eig(m)


class TestEvolveUnitary:
    def test_group_property(self):
        rng = np.random.default_rng(41)
        sd = linalg.herm_eig(random_hermitian(rng, 24))
        u1 = linalg.evolve_unitary(sd, 0.7)
        u2 = linalg.evolve_unitary(sd, 1.9)
        u12 = linalg.evolve_unitary(sd, 2.6)
        assert np.max(np.abs(u1 @ u2 - u12)) < 1e-12

    def test_result_unitary(self):
        rng = np.random.default_rng(42)
        sd = linalg.herm_eig(random_hermitian(rng, 24))
        assert linalg.is_unitary(linalg.evolve_unitary(sd, 3.3), tol=1e-9)

    def test_t_zero_identity(self):
        rng = np.random.default_rng(43)
        sd = linalg.herm_eig(random_hermitian(rng, 10))
        assert np.allclose(linalg.evolve_unitary(sd, 0.0), np.eye(10), atol=1e-13)


class TestNorms:
    def test_pauli_spectral_norm_one(self):
        for p in (SX, SY, SZ):
            assert np.isclose(linalg.spectral_norm(p), 1.0, atol=1e-14)

    def test_spectral_norm_matches_power_iteration(self):
        rng = np.random.default_rng(51)
        m = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        assert np.isclose(linalg.spectral_norm(m), power_iteration_norm(m), rtol=1e-10)

    def test_trace_norm_matches_eigenvalue_sum(self):
        rng = np.random.default_rng(52)
        h = random_hermitian(rng, 13)
        assert np.isclose(linalg.trace_norm(h), trace_norm_hermitian_oracle(h), atol=1e-11)

    def test_norms_unitarily_invariant(self):
        rng = np.random.default_rng(53)
        m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        u = random_unitary(rng, 8)
        v = random_unitary(rng, 8)
        assert np.isclose(linalg.spectral_norm(u @ m @ v), linalg.spectral_norm(m), atol=1e-11)
        assert np.isclose(linalg.trace_norm(u @ m @ v), linalg.trace_norm(m), atol=1e-10)

    def test_spectral_le_trace(self):
        rng = np.random.default_rng(54)
        m = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
        assert linalg.spectral_norm(m) <= linalg.trace_norm(m) + 1e-12


class TestThermalState:
    def test_boltzmann_populations(self):
        h = np.diag([0.0, 1.0, 2.5]).astype(complex)
        t = 1.3
        rho = linalg.thermal_state(h, t)
        weights = np.exp(-np.array([0.0, 1.0, 2.5]) / t)
        weights /= weights.sum()
        assert np.allclose(np.diag(rho).real, weights, atol=1e-14)
        assert np.allclose(rho, np.diag(np.diag(rho)), atol=1e-14)

    def test_state_properties_and_commutation(self):
        rng = np.random.default_rng(61)
        h = random_hermitian(rng, 12)
        rho = linalg.thermal_state(h, 0.7)
        assert np.isclose(np.trace(rho).real, 1.0, atol=1e-12)
        assert linalg.is_psd(rho, tol=1e-12)
        assert np.max(np.abs(h @ rho - rho @ h)) < 1e-11

    def test_high_temperature_limit(self):
        rng = np.random.default_rng(62)
        h = random_hermitian(rng, 6)
        rho = linalg.thermal_state(h, 1e9)
        assert np.allclose(rho, np.eye(6) / 6.0, atol=1e-8)

    def test_low_temperature_ground_state(self):
        h = np.diag([-1.0, 0.0, 4.0]).astype(complex)
        rho = linalg.thermal_state(h, 1e-3)
        assert np.isclose(rho[0, 0].real, 1.0, atol=1e-12)

    def test_rejects_nonpositive_temperature(self):
        with pytest.raises(InvalidTemperatureError, match="invalid temperature"):
            linalg.thermal_state(np.eye(2), 0.0)
        with pytest.raises(InvalidTemperatureError, match="invalid temperature"):
            linalg.thermal_state(np.eye(2), -2.0)


class TestPredicates:
    def test_hermitian_unitary_psd(self):
        assert linalg.is_hermitian(SZ)
        assert linalg.is_unitary(SY)
        assert not linalg.is_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
        assert linalg.is_psd(np.diag([0.5, 0.5]).astype(complex))
        assert not linalg.is_psd(SZ)
