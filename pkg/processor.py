"""
processor.py - Multimode photonic register
Applies C-NOT and swap-conjugated local gates to an M-mode register and estimates
gate / mode budgets from hardware parameters
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import SequenceFormatError, UsageError
from fock_core import ComplexMatrix, matrix_exponential
from machine_config import run_config_store
from machine_model import qubit_operators

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
MAX_MODES = 16


@dataclass(frozen=True)
class RegisterState:
    """
    Qubit ⊗ M binary photonic modes. The amplitude tensor has axis 0 for the qubit
    and axis 1 + m for mode m.
    """
    mode_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.mode_count <= MAX_MODES:
            raise UsageError(f"mode_count must be in [1, {MAX_MODES}], got {self.mode_count}")
        amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size != 2 ** (self.mode_count + 1):
            raise UsageError(
                f"{self.mode_count} modes need {2 ** (self.mode_count + 1)} amplitudes, got {amplitudes.size}"
            )
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise UsageError(f"register state must be normalized, norm is {norm:.12f}")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def basis(cls, mode_count: int, qubit: int = 0, modes: Optional[Sequence[int]] = None) -> "RegisterState":
        bits = list(modes) if modes is not None else [0] * mode_count
        if len(bits) != mode_count or any(b not in (0, 1) for b in bits) or qubit not in (0, 1):
            raise UsageError(f"basis state needs a qubit bit and {mode_count} mode bits in {{0, 1}}")
        tensor = np.zeros((2,) * (mode_count + 1), dtype=complex)
        tensor[(qubit, *bits)] = 1.0
        return cls(mode_count, tensor)

    @classmethod
    def random(cls, mode_count: int, rng: np.random.Generator) -> "RegisterState":
        size = 2 ** (mode_count + 1)
        vector = rng.normal(size=size) + 1j * rng.normal(size=size)
        return cls(mode_count, vector / np.linalg.norm(vector))

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * (self.mode_count + 1))

    def qubit_density(self) -> ComplexMatrix:
        """Reduced 2x2 density matrix of the qubit"""
        flat = self.tensor.reshape(2, -1)
        return flat @ flat.conj().T

    def _replace(self, tensor: np.ndarray) -> "RegisterState":
        return RegisterState(self.mode_count, tensor)


def _check_mode(state: RegisterState, mode: int, label: str = "mode"):
    if not 0 <= mode < state.mode_count:
        raise UsageError(f"{label} {mode} out of range for {state.mode_count} modes")


def apply_cnot(state: RegisterState, control: int, target: int) -> RegisterState:
    """Flip the target mode's bit where the control mode holds a photon"""
    _check_mode(state, control, "control mode")
    _check_mode(state, target, "target mode")
    if control == target:
        raise UsageError(f"control and target must differ, both are {control}")

    tensor = np.array(state.tensor)
    index = [slice(None)] * tensor.ndim
    index[1 + control] = 1
    # the control axis disappears from the slice, shifting later axes down by one
    target_axis = 1 + target if target < control else target
    tensor[tuple(index)] = np.flip(tensor[tuple(index)], axis=target_axis)
    return state._replace(tensor)


def _apply_single(tensor: np.ndarray, matrix: ComplexMatrix, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)


def local_gate(state: RegisterState, mode: int, alpha: float, beta: float, gamma: float,
               sigma_z_sign: int = 1) -> RegisterState:
    """
    S · exp(−i(ασx + βσy + γσz)) · S on (qubit, mode), S the qubit↔mode swap.
    The rotation ends up on the mode's {|0⟩, |1⟩} amplitudes and the qubit is restored.
    """
    _check_mode(state, mode)
    paulis = qubit_operators(sigma_z_sign)
    rotation = matrix_exponential(alpha * paulis["x"] + beta * paulis["y"] + gamma * paulis["z"], 1.0)

    swapped = np.swapaxes(state.tensor, 0, 1 + mode)
    rotated = _apply_single(swapped, rotation, 0)
    return state._replace(np.swapaxes(rotated, 0, 1 + mode))


# ---- Circuits ----

@dataclass(frozen=True)
class CnotGate:
    control: int
    target: int


@dataclass(frozen=True)
class LocalGate:
    mode: int
    alpha: float
    beta: float
    gamma: float


Gate = Union[CnotGate, LocalGate]


def parse_circuit(text: str) -> List[Gate]:
    """`CNOT c t` and `LOCAL m alpha beta gamma` per line; `#` starts a comment"""
    gates: List[Gate] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        op, *args = line.split()
        column = raw.index(op) + 1
        try:
            if op.upper() == "CNOT" and len(args) == 2:
                gates.append(CnotGate(int(args[0]), int(args[1])))
            elif op.upper() == "LOCAL" and len(args) == 4:
                gates.append(LocalGate(int(args[0]), *(float(a) for a in args[1:])))
            else:
                raise SequenceFormatError(f"expected 'CNOT c t' or 'LOCAL m alpha beta gamma', got '{line}'",
                                          line_number, column)
        except ValueError as e:
            if isinstance(e, SequenceFormatError):
                raise
            raise SequenceFormatError(f"bad number in '{line}'", line_number, column)
    return gates


def run_circuit(state: RegisterState, circuit: Sequence[Gate]) -> RegisterState:
    for gate in circuit:
        if isinstance(gate, CnotGate):
            state = apply_cnot(state, gate.control, gate.target)
        else:
            state = local_gate(state, gate.mode, gate.alpha, gate.beta, gate.gamma)
    return state


# ---- Resources ----

class ResourceParams(BaseModel):
    """Hardware numbers for the budget estimate; frequencies in Hz, rabi in rad/s"""
    model_config = ConfigDict(extra="forbid")

    quality_factor: float = Field(1.0e5, gt=0)
    rabi: float = Field(1.0e8, gt=0)
    coherence_time: float = Field(1.0e-4, ge=0)
    band_min: float = Field(5.0e9, gt=0)
    band_max: float = Field(15.0e9, gt=0)
    mode_spacing: float = Field(1.0e9, gt=0)
    ops_per_gate: int = Field(72, ge=63)
    rotation_overhead: float = Field(1.0, ge=0)

    @model_validator(mode="after")
    def _band_order(self) -> "ResourceParams":
        if self.band_max <= self.band_min:
            raise ValueError(f"band_max {self.band_max} must exceed band_min {self.band_min}")
        return self

    @classmethod
    def from_defaults(cls, **overrides) -> "ResourceParams":
        values = run_config_store.section("resources")
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class GateBudget(BaseModel):
    entangler_duration: float
    gate_duration: float
    gates_in_coherence: int
    cavity_lifetime: float
    lifetime_limited: bool


class CircuitCost(BaseModel):
    gate_count: int
    machine_ops: int
    duration: float
    feasible: bool


def modes_capacity(params: ResourceParams) -> int:
    return max(0, math.floor((params.band_max - params.band_min) / params.mode_spacing + 1e-9))


def gate_budget(params: ResourceParams) -> GateBudget:
    """
    τ_E = 2π/(√2Ω), gate = ops_per_gate·τ_E·(1 + rotation_overhead), gates = ⌊T/gate⌋.
    The cavity lifetime Q/(2πf) at the band center is a cross-check only.
    """
    entangler_duration = 2.0 * math.pi / (math.sqrt(2.0) * params.rabi)
    gate_duration = params.ops_per_gate * entangler_duration * (1.0 + params.rotation_overhead)
    gates = math.floor(params.coherence_time / gate_duration + 1e-9)

    center = 0.5 * (params.band_min + params.band_max)
    lifetime = params.quality_factor / (2.0 * math.pi * center)
    limited = lifetime < params.coherence_time
    if limited:
        logger.warning(
            f"⚠️  Cavity lifetime Q/2πf = {lifetime:.3g} s is shorter than the coherence budget "
            f"T = {params.coherence_time:.3g} s"
        )
    return GateBudget(
        entangler_duration=entangler_duration,
        gate_duration=gate_duration,
        gates_in_coherence=gates,
        cavity_lifetime=lifetime,
        lifetime_limited=limited,
    )


def compile_circuit(circuit: Sequence[Gate], params: ResourceParams,
                    mode_count: Optional[int] = None) -> CircuitCost:
    """CNOT costs ops_per_gate machine operations, LOCAL 2·ops_per_gate + 1 (swap, rotation, swap)"""
    mode_count = mode_count if mode_count is not None else modes_capacity(params)
    budget = gate_budget(params)

    ops = 0
    for gate in circuit:
        modes: Tuple[int, ...]
        if isinstance(gate, CnotGate):
            modes = (gate.control, gate.target)
            if gate.control == gate.target:
                raise UsageError(f"CNOT control and target must differ, both are {gate.control}")
            ops += params.ops_per_gate
        else:
            modes = (gate.mode,)
            ops += 2 * params.ops_per_gate + 1
        bad = [m for m in modes if not 0 <= m < mode_count]
        if bad:
            raise UsageError(f"gate {gate} references modes {bad} outside [0, {mode_count})")

    duration = ops * budget.gate_duration / params.ops_per_gate
    return CircuitCost(
        gate_count=len(circuit),
        machine_ops=ops,
        duration=duration,
        feasible=duration <= params.coherence_time,
    )


class ResourceEstimate(BaseModel):
    params: ResourceParams
    budget: GateBudget
    modes: int


def estimate_resources(params: ResourceParams) -> ResourceEstimate:
    return ResourceEstimate(params=params, budget=gate_budget(params), modes=modes_capacity(params))
