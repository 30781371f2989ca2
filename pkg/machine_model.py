"""
machine_model.py - The six primitive machine unitaries
Entanglers Â, B̂, qubit rotations U_x, U_y, U_z and the free phase U_τ in the truncated
qubit ⊗ mode₂ ⊗ mode₁ space, plus restriction to the 8-dimensional computational subspace
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Tuple, Union

import numpy as np

from errors import UsageError
from fock_core import (
    ComplexMatrix,
    FockConfig,
    build_mode_operators,
    dagger,
    identity,
    matrix_exponential,
    tensor_product,
)
from machine_config import MachineConfig

logger = logging.getLogger(__name__)

SUBSPACE_DIM = 8
DEFAULT_N_MAX = 3
# τΩ√2 = 2π, so the |e,0⟩ ↔ |g,1⟩ doublet turns by Ωτ = π√2
ENTANGLER_ANGLE = math.pi * math.sqrt(2.0)


class Entangler(str, Enum):
    A = "A"
    B = "B"

    @property
    def mode(self) -> int:
        return 1 if self is Entangler.A else 2


class Axis(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"


MachineLike = Union[MachineConfig, FockConfig, int, None]


def _n_max_of(config: MachineLike) -> int:
    if config is None:
        return DEFAULT_N_MAX
    if isinstance(config, int):
        return config
    return config.n_max


@dataclass(frozen=True)
class SubspaceBasis:
    """Ordered labels (q, n₂, n₁) of H_{0,1}; index 0 = |111⟩, index 7 = |000⟩"""
    labels: Tuple[Tuple[int, int, int], ...]
    index_of: Dict[Tuple[int, int, int], int] = field(hash=False, compare=False)

    @classmethod
    def standard(cls) -> "SubspaceBasis":
        labels = []
        for index in range(SUBSPACE_DIM):
            code = 7 - index
            labels.append(((code >> 2) & 1, (code >> 1) & 1, code & 1))
        return cls(labels=tuple(labels), index_of={label: i for i, label in enumerate(labels)})

    def label_text(self, index: int) -> str:
        return "|" + "".join(str(v) for v in self.labels[index]) + "⟩"


subspace_basis = SubspaceBasis.standard()


def qubit_operators(sigma_z_sign: int = 1) -> Dict[str, ComplexMatrix]:
    """
    Qubit operators with |g⟩ = index 0, |e⟩ = index 1 and σ⁺ = |e⟩⟨g|.

    σx = σ⁻ + σ⁺, σy = iσ⁻ − iσ⁺, σz = sigma_z_sign·(2σ⁻σ⁺ − 1).
    """
    plus = np.array([[0, 0], [1, 0]], dtype=complex)
    minus = plus.T.copy()
    return {
        "plus": plus,
        "minus": minus,
        "x": minus + plus,
        "y": 1j * minus - 1j * plus,
        "z": sigma_z_sign * (2 * minus @ plus - identity(2)),
    }


class MachineModel:
    """Operators of the joint qubit ⊗ mode₂ ⊗ mode₁ space at one Fock truncation"""

    def __init__(self, n_max: int):
        self.fock = FockConfig(n_max=n_max, mode_count=2)
        self.n_max = n_max
        self.mode_dim = n_max + 1
        self.dim = self.fock.total_dim

        annihilation, creation, number = build_mode_operators(n_max)
        eye_mode = identity(self.mode_dim)
        eye_qubit = identity(2)
        self._mode_ops = {
            1: (
                tensor_product([eye_qubit, eye_mode, annihilation]),
                tensor_product([eye_qubit, eye_mode, creation]),
                tensor_product([eye_qubit, eye_mode, number]),
            ),
            2: (
                tensor_product([eye_qubit, annihilation, eye_mode]),
                tensor_product([eye_qubit, creation, eye_mode]),
                tensor_product([eye_qubit, number, eye_mode]),
            ),
        }
        self._eye_modes = tensor_product([eye_mode, eye_mode])
        self.projector = self._build_projector()

    def full_index(self, q: int, n2: int, n1: int) -> int:
        return (q * self.mode_dim + n2) * self.mode_dim + n1

    def _build_projector(self) -> ComplexMatrix:
        projector = np.zeros((SUBSPACE_DIM, self.dim), dtype=complex)
        for index, (q, n2, n1) in enumerate(subspace_basis.labels):
            projector[index, self.full_index(q, n2, n1)] = 1.0
        return projector

    def qubit_operator(self, name: str, sigma_z_sign: int = 1) -> ComplexMatrix:
        return np.kron(qubit_operators(sigma_z_sign)[name], self._eye_modes)

    def number_operator(self, mode: int) -> ComplexMatrix:
        return self._mode_ops[mode][2]

    def coupling_generator(self, mode: int) -> ComplexMatrix:
        """â†σ⁻ + âσ⁺ for mode 1, b̂†σ⁻ + b̂σ⁺ for mode 2"""
        if mode not in self._mode_ops:
            raise UsageError(f"mode must be 1 or 2, got {mode}")
        annihilation, creation, _ = self._mode_ops[mode]
        return creation @ self.qubit_operator("minus") + annihilation @ self.qubit_operator("plus")

    def jaynes_cummings_evolution(self, mode: int, angle: float) -> ComplexMatrix:
        return matrix_exponential(self.coupling_generator(mode), angle)

    def entangler(self, mode: int) -> ComplexMatrix:
        self.fock.require_trapping_level()
        return self.jaynes_cummings_evolution(mode, ENTANGLER_ANGLE)

    def qubit_rotation(self, axis: Union[Axis, str], sigma: float, sigma_z_sign: int = 1) -> ComplexMatrix:
        pauli = qubit_operators(sigma_z_sign)[Axis(axis).value]
        # σ² = 1, so exp(−iσθ) = cos θ − i sin θ σ
        rotation = math.cos(sigma) * identity(2) - 1j * math.sin(sigma) * pauli
        return np.kron(rotation, self._eye_modes)

    def free_phase(self, phase: float) -> ComplexMatrix:
        difference = np.real(np.diag(self.number_operator(1) - self.number_operator(2)))
        return np.diag(np.exp(-1j * phase * difference))

    def restrict(self, full: ComplexMatrix) -> Tuple[ComplexMatrix, float]:
        full = np.asarray(full, dtype=complex)
        if full.shape != (self.dim, self.dim):
            raise UsageError(f"expected a {self.dim}x{self.dim} operator, got {full.shape}")
        block = self.projector @ full @ dagger(self.projector)
        complement = identity(self.dim) - dagger(self.projector) @ self.projector
        coupling = complement @ full @ dagger(self.projector)
        leakage = float(np.linalg.norm(coupling, 2)) if coupling.any() else 0.0
        return block, leakage


@lru_cache(maxsize=16)
def machine_model(n_max: int = DEFAULT_N_MAX) -> MachineModel:
    return MachineModel(n_max)


def _model_for_dimension(dim: int) -> MachineModel:
    mode_dim = math.isqrt(dim // 2) if dim % 2 == 0 else 0
    if mode_dim < 2 or 2 * mode_dim * mode_dim != dim:
        raise UsageError(f"dimension {dim} is not 2·(n_max+1)² for any n_max ≥ 1")
    return machine_model(mode_dim - 1)


# ---- Primitive operations ----

def entangler(mode: int, config: MachineLike = None) -> ComplexMatrix:
    """Â (mode 1) or B̂ (mode 2) in the full truncated space"""
    return machine_model(_n_max_of(config)).entangler(mode)


def jaynes_cummings_evolution(mode: int, angle: float, config: MachineLike = None) -> ComplexMatrix:
    return machine_model(_n_max_of(config)).jaynes_cummings_evolution(mode, angle)


def qubit_rotation(axis: Union[Axis, str], sigma: float, config: MachineLike = None,
                   sigma_z_sign: int = 1) -> ComplexMatrix:
    return machine_model(_n_max_of(config)).qubit_rotation(axis, sigma, sigma_z_sign)


def free_phase(phase: float, config: MachineLike = None) -> ComplexMatrix:
    """U_τ with phase = τΔ"""
    return machine_model(_n_max_of(config)).free_phase(phase)


def restrict(full: ComplexMatrix, config: MachineLike = None) -> Tuple[ComplexMatrix, float]:
    """
    Compress a full-space operator onto H_{0,1}.

    Returns:
        (8x8 block P·U·P†, leakage = spectral norm of (1−P)·U·P†)
    """
    full = np.asarray(full, dtype=complex)
    if full.ndim != 2 or full.shape[0] != full.shape[1]:
        raise UsageError(f"restrict needs a square operator, got shape {full.shape}")
    if config is None:
        return _model_for_dimension(full.shape[0]).restrict(full)
    return machine_model(_n_max_of(config)).restrict(full)


def subspace_projector(config: MachineLike = None) -> ComplexMatrix:
    return machine_model(_n_max_of(config)).projector


# ---- Restricted 8x8 blocks used by sequence evaluation ----

@lru_cache(maxsize=4)
def entangler_block(entangler_tag: Entangler) -> ComplexMatrix:
    block, _ = machine_model(2).restrict(machine_model(2).entangler(Entangler(entangler_tag).mode))
    block.setflags(write=False)
    return block


@lru_cache(maxsize=4)
def restricted_coupling_generator(mode: int) -> ComplexMatrix:
    model = machine_model(2)
    block, _ = model.restrict(model.coupling_generator(mode))
    block.setflags(write=False)
    return block


@lru_cache(maxsize=8)
def rotation_generator_block(axis: Axis, sigma_z_sign: int = 1) -> ComplexMatrix:
    # at n_max = 1 the full space is H_{0,1} itself and P is a permutation
    model = machine_model(1)
    block = model.projector @ model.qubit_operator(Axis(axis).value, sigma_z_sign) @ dagger(model.projector)
    block.setflags(write=False)
    return block


@lru_cache(maxsize=4)
def free_phase_generator_block() -> ComplexMatrix:
    model = machine_model(1)
    block = model.projector @ (model.number_operator(1) - model.number_operator(2)) @ dagger(model.projector)
    block.setflags(write=False)
    return block


def rotation_block(axis: Axis, sigma: float, sigma_z_sign: int = 1) -> ComplexMatrix:
    generator = rotation_generator_block(Axis(axis), sigma_z_sign)
    return math.cos(sigma) * identity(SUBSPACE_DIM) - 1j * math.sin(sigma) * generator
