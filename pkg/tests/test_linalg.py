"""
Tests for the dense two-qubit linear algebra layer.
"""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from app.core.exceptions import DimensionError, NonHermitianError, NumericalInvariantError
from app.core.linalg import (
    I2,
    KET_0,
    KET_1,
    KET_PLUS,
    X,
    Y,
    Z,
    DensityOperator,
    hermitian_eigendecomposition,
    hermitian_exponential,
    norms,
    partial_trace,
    partial_transpose,
    require_hermitian,
    tensor_product,
    trace_distance,
    unitarity_error,
    von_neumann_entropy,
)


class TestPartialOperations:
    def test_partial_trace_of_product(self):
        a = np.array([[0.7, 0.1 - 0.2j], [0.1 + 0.2j, 0.3]])
        b = np.array([[0.4, 0.0], [0.0, 0.6]])
        m = tensor_product(a, b)
        np.testing.assert_allclose(partial_trace(m, "first"), a, atol=1e-14)
        np.testing.assert_allclose(partial_trace(m, "second"), b, atol=1e-14)

    def test_partial_transpose_of_bell_state_has_negative_eigenvalue(self, bell_state):
        values = np.linalg.eigvalsh(partial_transpose(bell_state.matrix))
        assert values.min() == pytest.approx(-0.5, abs=1e-12)

    def test_partial_transpose_is_involution(self, bell_state):
        twice = partial_transpose(partial_transpose(bell_state.matrix, "first"), "first")
        np.testing.assert_allclose(twice, bell_state.matrix, atol=1e-14)

    def test_two_qubit_operations_reject_single_qubit(self):
        with pytest.raises(DimensionError):
            partial_trace(I2)
        with pytest.raises(DimensionError):
            partial_transpose(I2)

    def test_unknown_subsystem(self, bell_state):
        with pytest.raises(ValueError):
            partial_trace(bell_state.matrix, "third")


class TestEigendecomposition:
    def test_ascending_eigenvalues(self):
        values, vectors = hermitian_eigendecomposition(Z)
        np.testing.assert_allclose(values, [-1.0, 1.0])
        np.testing.assert_allclose(np.abs(vectors[:, 1]), np.abs(KET_0), atol=1e-14)

    def test_phase_convention(self):
        _, vectors = hermitian_eigendecomposition(Y)
        for k in range(2):
            first = next(c for c in vectors[:, k] if abs(c) > 1e-12)
            assert first.imag == pytest.approx(0.0, abs=1e-14)
            assert first.real > 0

    def test_degenerate_spectrum_is_reproducible(self):
        first = hermitian_eigendecomposition(np.eye(4, dtype=complex))
        second = hermitian_eigendecomposition(np.eye(4, dtype=complex))
        np.testing.assert_array_equal(first[1], second[1])

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianError):
            hermitian_eigendecomposition(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_hermiticity_tolerance_scales_with_magnitude(self):
        big = 1e6 * X
        big[0, 1] += 1e-8
        require_hermitian(big)


class TestExponential:
    @pytest.mark.parametrize("scale", [0.0, 0.3, 2.5])
    def test_matches_scipy(self, scale):
        h = 0.5 * Z + 1.3 * X + 0.2 * Y
        np.testing.assert_allclose(hermitian_exponential(h, scale), expm(-1j * scale * h), atol=1e-12)

    def test_joint_exponential_is_unitary(self):
        h = tensor_product(Z, X) + 7.0 * tensor_product(X, I2)
        assert unitarity_error(hermitian_exponential(h, 0.9)) < 1e-12


class TestNormsAndDistances:
    def test_pauli_norms(self):
        n = norms(X)
        assert n.trace_norm == pytest.approx(2.0)
        assert n.operator_norm == pytest.approx(1.0)
        assert n.frobenius_norm == pytest.approx(math.sqrt(2.0))

    def test_orthogonal_states_are_at_distance_one(self):
        a = DensityOperator.pure(KET_0)
        b = DensityOperator.pure(KET_1)
        assert trace_distance(a.matrix, b.matrix) == pytest.approx(1.0)

    def test_entropy(self):
        assert von_neumann_entropy(0.5 * I2) == pytest.approx(math.log(2.0))
        assert von_neumann_entropy(DensityOperator.pure(KET_PLUS).matrix) == pytest.approx(0.0, abs=1e-12)


class TestDensityOperator:
    def test_rejects_wrong_trace(self):
        with pytest.raises(NumericalInvariantError):
            DensityOperator(np.eye(2, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(NumericalInvariantError):
            DensityOperator(np.array([[1.2, 0.0], [0.0, -0.2]], dtype=complex))

    def test_rejects_non_hermitian(self):
        with pytest.raises(NumericalInvariantError):
            DensityOperator(np.array([[0.5, 0.3], [0.0, 0.5]], dtype=complex))

    def test_from_matrix_symmetrises_rounding_noise(self):
        m = np.array([[0.5, 0.5 + 1e-13j], [0.5, 0.5]], dtype=complex)
        rho = DensityOperator.from_matrix(m)
        assert rho.matrix[0, 1] == pytest.approx(0.5)

    def test_tensor_then_reduce(self):
        rho = DensityOperator.pure(KET_PLUS)
        joint = rho.tensor(DensityOperator.pure(KET_1))
        assert joint.dim == 4
        np.testing.assert_allclose(joint.reduce("first").matrix, rho.matrix, atol=1e-14)
        assert joint.expect(tensor_product(X, Z)) == pytest.approx(-1.0)
