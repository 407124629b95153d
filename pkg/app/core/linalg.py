"""
Dense complex linear algebra for the 2x2 (working medium) and 4x4 (working
medium + lubricant) operators used across the engine.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Two-qubit
operators use the Kronecker ordering ``system ⊗ lubricant`` (row-major).
"""

import logging
from dataclasses import dataclass
from typing import Literal, NamedTuple, Tuple

import numpy as np
import numpy.typing as npt

from app.core.exceptions import DimensionError, NonHermitianError, NumericalInvariantError


# Configure Logging
logger = logging.getLogger(__name__)

OperatorMatrix = npt.NDArray[np.complex128]
Subsystem = Literal["first", "second"]

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_SLACK = -1e-9

# Pauli matrices and single-qubit states
I2: OperatorMatrix = np.eye(2, dtype=complex)
I4: OperatorMatrix = np.eye(4, dtype=complex)
X: OperatorMatrix = np.array([[0, 1], [1, 0]], dtype=complex)
Y: OperatorMatrix = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z: OperatorMatrix = np.array([[1, 0], [0, -1]], dtype=complex)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def as_operator(m: npt.ArrayLike) -> OperatorMatrix:
    """Coerces input into a square complex matrix."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {arr.shape}")
    return arr


def projector(ket: npt.ArrayLike) -> OperatorMatrix:
    """Returns |ket><ket|."""
    v = np.asarray(ket, dtype=complex)
    return np.outer(v, v.conj())


def dagger(m: OperatorMatrix) -> OperatorMatrix:
    return m.conj().T


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def expectation(h: OperatorMatrix, rho: OperatorMatrix) -> float:
    """Tr[h rho] (real part; both arguments Hermitian)."""
    return float(np.real(np.trace(h @ rho)))


def tensor_product(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return np.kron(as_operator(a), as_operator(b))


def _check_two_qubit(m: OperatorMatrix) -> OperatorMatrix:
    m = as_operator(m)
    if m.shape != (4, 4):
        raise DimensionError(f"Expected a 4x4 operator, got {m.shape}")
    return m


def partial_trace(m: OperatorMatrix, keep: Subsystem = "first") -> OperatorMatrix:
    """
    Traces out one qubit of a two-qubit operator.

    Args:
        m (OperatorMatrix): 4x4 operator on system ⊗ lubricant.
        keep (Subsystem): 'first' keeps the system, 'second' keeps the lubricant.

    Returns:
        OperatorMatrix: The reduced 2x2 operator.
    """
    t = _check_two_qubit(m).reshape(2, 2, 2, 2)
    if keep == "first":
        return np.einsum("ijkj->ik", t)
    if keep == "second":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"Unknown subsystem '{keep}'")


def partial_transpose(m: OperatorMatrix, side: Subsystem = "second") -> OperatorMatrix:
    """Transposes one tensor factor of a two-qubit operator."""
    t = _check_two_qubit(m).reshape(2, 2, 2, 2)
    if side == "second":
        return t.transpose(0, 3, 2, 1).reshape(4, 4)
    if side == "first":
        return t.transpose(2, 1, 0, 3).reshape(4, 4)
    raise ValueError(f"Unknown subsystem '{side}'")


def hermiticity_error(m: OperatorMatrix) -> float:
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def require_hermitian(m: OperatorMatrix, tol: float = HERMITIAN_TOL) -> OperatorMatrix:
    m = as_operator(m)
    # Absolute tolerance scaled by the operator size so large couplings are not rejected
    scale = max(1.0, float(np.max(np.abs(m))))
    err = hermiticity_error(m)
    if err > tol * scale:
        raise NonHermitianError(f"Operator is not Hermitian (max |m - m^†| = {err:.3e})")
    return m


def _fix_phase(vec: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """Rotates an eigenvector so its first non-negligible entry is real positive."""
    for component in vec:
        if abs(component) > 1e-12:
            return vec * (abs(component) / component)
    return vec


def hermitian_eigendecomposition(
    m: OperatorMatrix,
) -> Tuple[npt.NDArray[np.float64], OperatorMatrix]:
    """
    Eigendecomposition of a Hermitian operator.

    Eigenvalues come out ascending. Degenerate eigenvalues are ordered by the
    lexicographic value of their rounded eigenvector entries, and every
    eigenvector has its phase fixed, so the output is reproducible.

    Raises:
        NonHermitianError: If ``m`` is not Hermitian within 1e-10.
    """
    m = require_hermitian(m)
    values, vectors = np.linalg.eigh(0.5 * (m + dagger(m)))
    columns = [_fix_phase(vectors[:, k]) for k in range(vectors.shape[1])]

    def sort_key(k: int):
        rounded = np.round(columns[k], 10)
        return (round(float(values[k]), 10), tuple(-rounded.real), tuple(-rounded.imag))

    order = sorted(range(len(values)), key=sort_key)
    vecs = np.column_stack([columns[k] for k in order])
    return np.asarray(values[order], dtype=float), vecs


def hermitian_exponential(h: OperatorMatrix, scale: float) -> OperatorMatrix:
    """Returns exp(-i * scale * h) through the eigendecomposition of ``h``."""
    values, vectors = hermitian_eigendecomposition(h)
    phases = np.exp(-1j * scale * values)
    return (vectors * phases) @ dagger(vectors)


class Norms(NamedTuple):
    trace_norm: float
    operator_norm: float
    frobenius_norm: float


def norms(m: OperatorMatrix) -> Norms:
    """Trace, operator and Frobenius norms from the singular values."""
    m = as_operator(m)
    if m.size == 0:
        return Norms(0.0, 0.0, 0.0)
    sv = np.linalg.svd(m, compute_uv=False)
    return Norms(float(np.sum(sv)), float(np.max(sv)), float(np.sqrt(np.sum(sv**2))))


def operator_norm(m: OperatorMatrix) -> float:
    return norms(m).operator_norm


def trace_norm(m: OperatorMatrix) -> float:
    return norms(m).trace_norm


def trace_distance(a: OperatorMatrix, b: OperatorMatrix) -> float:
    """(1/2)·||a − b||₁."""
    return 0.5 * trace_norm(a - b)


def unitarity_error(u: OperatorMatrix) -> float:
    return operator_norm(dagger(u) @ u - np.eye(u.shape[0]))


def von_neumann_entropy(rho: OperatorMatrix) -> float:
    """Entropy in nats."""
    values = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    values = values[values > 1e-15]
    return float(-np.sum(values * np.log(values)))


@dataclass(frozen=True)
class DensityOperator:
    """
    A validated density matrix.

    Construction checks Hermiticity (1e-10), unit trace (1e-9) and
    positivity with a slack of -1e-9 on the smallest eigenvalue. Values
    below the slack raise instead of being clipped.
    """

    matrix: OperatorMatrix

    def __post_init__(self):
        m = as_operator(self.matrix)
        err = hermiticity_error(m)
        if err > HERMITIAN_TOL:
            raise NumericalInvariantError(f"Density operator not Hermitian (err={err:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise NumericalInvariantError(f"Density operator trace {tr.real:.12f} != 1")
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (m + dagger(m)))))
        if min_eig < POSITIVITY_SLACK:
            raise NumericalInvariantError(f"Density operator not positive (min eig={min_eig:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, m: npt.ArrayLike, hermitize: bool = True) -> "DensityOperator":
        """Builds a density operator, optionally symmetrising away rounding noise first."""
        arr = as_operator(m)
        if hermitize:
            arr = 0.5 * (arr + dagger(arr))
        return cls(arr)

    @classmethod
    def pure(cls, ket: npt.ArrayLike) -> "DensityOperator":
        v = np.asarray(ket, dtype=complex)
        return cls(projector(v / np.linalg.norm(v)))

    def expect(self, h: OperatorMatrix) -> float:
        return expectation(h, self.matrix)

    def reduce(self, keep: Subsystem = "first") -> "DensityOperator":
        return DensityOperator.from_matrix(partial_trace(self.matrix, keep))

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(tensor_product(self.matrix, other.matrix))
