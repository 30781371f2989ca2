"""
fock_core.py - Truncated Fock-space operator algebra
Dense complex linear algebra primitives shared by every other module
"""

from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Tuple

import numpy as np

from errors import ConfigurationError, ContractViolation, UsageError

# ComplexMatrix is a square complex128 numpy array throughout the package
ComplexMatrix = np.ndarray

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10
QUBIT_DIM = 2


@dataclass(frozen=True)
class FockConfig:
    """Truncation of the joint qubit + bosonic modes space"""
    n_max: int
    mode_count: int = 2
    qubit_dim: int = QUBIT_DIM

    def __post_init__(self):
        if self.n_max < 0:
            raise UsageError(f"n_max must be non-negative, got {self.n_max}")
        if self.mode_count < 1:
            raise UsageError(f"mode_count must be positive, got {self.mode_count}")

    @property
    def mode_dim(self) -> int:
        return self.n_max + 1

    @property
    def total_dim(self) -> int:
        return self.qubit_dim * self.mode_dim ** self.mode_count

    def require_trapping_level(self):
        """Entanglers need the photon-number-2 trapping level inside the truncation"""
        if self.n_max < 2:
            raise ConfigurationError(
                f"n_max={self.n_max} drops the trapping level 2; entanglers need n_max >= 2"
            )


@dataclass(frozen=True)
class UnitaryReport:
    max_deviation: float
    passed: bool


def identity(dim: int) -> ComplexMatrix:
    return np.eye(dim, dtype=complex)


def dagger(matrix: ComplexMatrix) -> ComplexMatrix:
    return matrix.conj().T


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b - b @ a


def max_norm(matrix: ComplexMatrix) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def is_hermitian(matrix: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return max_norm(matrix - dagger(matrix)) < tol


def build_mode_operators(n_max: int) -> Tuple[ComplexMatrix, ComplexMatrix, ComplexMatrix]:
    """
    Ladder operators of one bosonic mode truncated at n_max.

    Returns:
        (annihilation, creation, number), each (n_max+1) x (n_max+1)
    """
    if n_max < 0:
        raise UsageError(f"n_max must be non-negative, got {n_max}")
    dim = n_max + 1
    annihilation = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        annihilation[n - 1, n] = np.sqrt(n)
    creation = annihilation.conj().T
    number = creation @ annihilation
    return annihilation, creation, number


def tensor_product(factors: Sequence[ComplexMatrix]) -> ComplexMatrix:
    """Kronecker product in the declared factor order"""
    if len(factors) == 0:
        raise UsageError("tensor_product needs at least one factor")
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def matrix_exponential(generator: ComplexMatrix, scale: float) -> ComplexMatrix:
    """
    exp(-i * scale * H) for hermitian H, through the eigendecomposition H = V diag(w) V†.

    Raises:
        ContractViolation: if the generator is not hermitian within HERMITIAN_TOL
    """
    generator = np.asarray(generator, dtype=complex)
    if not is_hermitian(generator):
        raise ContractViolation("matrix_exponential needs a hermitian generator")
    # symmetrize so eigh sees exactly hermitian input
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (generator + dagger(generator)))
    phases = np.exp(-1j * scale * eigenvalues)
    return (eigenvectors * phases) @ dagger(eigenvectors)


def check_unitary(matrix: ComplexMatrix, tol: float = UNITARY_TOL) -> UnitaryReport:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise UsageError(f"check_unitary needs a square matrix, got shape {matrix.shape}")
    deviation = max_norm(dagger(matrix) @ matrix - identity(matrix.shape[0]))
    return UnitaryReport(max_deviation=deviation, passed=deviation < tol)
