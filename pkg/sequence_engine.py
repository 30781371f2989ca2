"""
sequence_engine.py - Control sequences, 8x8 evaluation and verification
Holds the two published 72-parameter solutions and checks them against the printed targets
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from errors import ContractViolation, UsageError
from fock_core import ComplexMatrix, check_unitary, dagger, identity
from machine_model import (
    SUBSPACE_DIM,
    Axis,
    Entangler,
    entangler,
    entangler_block,
    qubit_rotation,
    restrict,
    rotation_block,
    subspace_basis,
)

logger = logging.getLogger(__name__)

FIDELITY_UNITARY_TOL = 1e-8
TARGET_UNITARY_TOL = 1e-10
DEFAULT_THRESHOLD = 0.98
PHOTONIC_RESIDUAL_LIMIT = 0.05


@dataclass(frozen=True)
class Step:
    entangler: Entangler
    axis: Axis
    sigma: float


PatternEntry = Tuple[Entangler, Axis]

# A/x, B/y, A/z repeated with period 3
CANONICAL_PATTERN: Tuple[PatternEntry, ...] = (
    (Entangler.A, Axis.X),
    (Entangler.B, Axis.Y),
    (Entangler.A, Axis.Z),
)


def normalize_pattern(pattern: Sequence) -> Tuple[PatternEntry, ...]:
    """Accepts (entangler, axis) pairs or {"entangler", "axis"} dicts"""
    entries = []
    for item in pattern:
        if isinstance(item, dict):
            item = (item.get("entangler"), item.get("axis"))
        try:
            tag, axis = item
            entries.append((Entangler(tag), Axis(axis)))
        except (TypeError, ValueError) as e:
            raise UsageError(f"invalid pattern entry {item!r}: {e}")
    if not entries:
        raise UsageError("pattern must have at least one entry")
    return tuple(entries)


@dataclass(frozen=True)
class ControlSequence:
    """steps[0] acts first (rightmost factor of the product)"""
    steps: Tuple[Step, ...]
    name: str = ""

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def sigmas(self) -> List[float]:
        return [step.sigma for step in self.steps]

    @property
    def pattern(self) -> Tuple[PatternEntry, ...]:
        return tuple((step.entangler, step.axis) for step in self.steps)

    @classmethod
    def from_sigmas(cls, sigmas: Sequence[float], pattern: Sequence = CANONICAL_PATTERN,
                    name: str = "") -> "ControlSequence":
        entries = normalize_pattern(pattern)
        steps = tuple(
            Step(entries[k % len(entries)][0], entries[k % len(entries)][1], float(sigma))
            for k, sigma in enumerate(sigmas)
        )
        return cls(steps=steps, name=name)

    def with_sigmas(self, sigmas: Sequence[float]) -> "ControlSequence":
        if len(sigmas) != len(self.steps):
            raise UsageError(f"expected {len(self.steps)} sigmas, got {len(sigmas)}")
        return replace(self, steps=tuple(replace(s, sigma=float(v)) for s, v in zip(self.steps, sigmas)))

    def concat(self, other: "ControlSequence") -> "ControlSequence":
        """self runs first, then other"""
        name = "+".join(n for n in (self.name, other.name) if n)
        return ControlSequence(steps=self.steps + other.steps, name=name)


# ---- Readings of the published parameter lists ----

class SigmaOrder(str, Enum):
    PRINTED_FIRST = "printed-first"
    PRINTED_LAST = "printed-last"


@dataclass(frozen=True)
class Reading:
    """How a printed σ list maps onto steps, plus the σz sign convention"""
    sigma_order: SigmaOrder = SigmaOrder.PRINTED_FIRST
    sigma_z_sign: int = 1

    @property
    def label(self) -> str:
        return f"{self.sigma_order.value}/{'+' if self.sigma_z_sign > 0 else '-'}1"


ALL_READINGS: Tuple[Reading, ...] = tuple(
    Reading(order, sign)
    for order in (SigmaOrder.PRINTED_FIRST, SigmaOrder.PRINTED_LAST)
    for sign in (1, -1)
)


def apply_reading(seq: ControlSequence, reading: Reading) -> ControlSequence:
    """
    Map a printed list onto steps. Under printed-last the first printed value is σ_M,
    so the values are reversed while the positional entangler/axis pattern stays.
    """
    if reading.sigma_order is SigmaOrder.PRINTED_FIRST:
        return seq
    return seq.with_sigmas(list(reversed(seq.sigmas)))


# ---- Published data ----

PUBLISHED_CNOT_SIGMAS: Tuple[float, ...] = (
    -0.2872, 0.1842, -0.5489, 0.2484, 0.0132, -0.1134, -0.5642, -0.5800, -2.4470, -0.0432,
    0.3052, 0.0869, 0.5365, 0.6245, -0.7469, -0.5959, -0.9621, -2.0245, -0.0107, 0.3731,
    0.0410, 0.3369, 0.4287, 0.1212, -0.6637, -0.1490, -2.5645, -0.0396, -0.0460, 0.1488,
    0.2528, 0.4742, 0.9225, -0.3419, -0.4538, -3.4287, -0.2260, 0.0561, 0.5803, 0.7112,
    0.8276, -0.1700, -0.1722, -0.6864, -2.6273, 0.4602, 0.2338, 0.9878, 0.0751, 0.2090,
    -0.1949, 0.1052, -0.3791, -2.4825, 0.5824, 0.3608, 0.69429, 1.0914, 0.2271, 0.2274,
    -0.6667, -0.1907, -3.1813, 0.3526, -0.3946, 0.2783, 0.6658, 0.0545, -0.4650, 0.0846,
    -0.1140, -2.8158,
)

PUBLISHED_SWAP_SIGMAS: Tuple[float, ...] = (
    -0.3520, 0.0423, -0.1621, 0.4462, 0.4655, 0.4042, 0.2449, -0.1200, -2.5231, 0.077,
    0.2609, 0.7865, -0.1527, 0.2210, -1.0893, 0.0321, 0.2538, -1.7061, -0.0262, 0.0,
    0.2744, -0.2684, 0.5115, 0.0, 0.7084, 0.0365, -2.2245, 0.5371, 0.4411, 0.6516,
    0.7463, 1.2677, -0.4479, -0.4177, -0.3899, 0.3146, 0.1395, -0.3993, 0.2377, 0.0146,
    0.3367, 0.3302, -2.6975, -0.4906, -2.4926, -0.0343, 0.0802, -0.1986, 0.6301, 0.5024,
    0.8930, -0.2323, -0.3366, -2.7822, 0.3633, 0.3231, 0.2038, 0.0344, 0.3335, -1.1079,
    -0.0373, 0.1819, -2.3148, 0.1895, -0.1227, 0.4528, 0.0, -0.3426, -0.3362, -0.3346,
    -0.3548, -2.0647,
)


def canonical_cnot_sequence() -> ControlSequence:
    return ControlSequence.from_sigmas(PUBLISHED_CNOT_SIGMAS, name="cnot72")


def canonical_swap_sequence() -> ControlSequence:
    return ControlSequence.from_sigmas(PUBLISHED_SWAP_SIGMAS, name="swap72")


# ---- Targets ----

@dataclass(frozen=True)
class GateTarget:
    name: str
    matrix: ComplexMatrix

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.shape != (SUBSPACE_DIM, SUBSPACE_DIM):
            raise UsageError(f"target '{self.name}' must be 8x8, got {matrix.shape}")
        report = check_unitary(matrix, TARGET_UNITARY_TOL)
        if not report.passed:
            raise UsageError(
                f"target '{self.name}' is not unitary (deviation {report.max_deviation:.2e})"
            )
        object.__setattr__(self, "matrix", matrix)


def permutation_matrix(pairs: Sequence[Tuple[int, int]]) -> ComplexMatrix:
    matrix = identity(SUBSPACE_DIM)
    for a, b in pairs:
        matrix[[a, b]] = matrix[[b, a]]
    return matrix


def _qubit_mode1_swap() -> ComplexMatrix:
    # |q, n₂, n₁⟩ → |n₁, n₂, q⟩
    matrix = np.zeros((SUBSPACE_DIM, SUBSPACE_DIM), dtype=complex)
    for index, (q, n2, n1) in enumerate(subspace_basis.labels):
        matrix[subspace_basis.index_of[(n1, n2, q)], index] = 1.0
    return matrix


def _build_targets() -> Dict[str, GateTarget]:
    return {
        # flips n₁ when n₂ = 1, identity on the qubit
        "cnot": GateTarget("cnot", permutation_matrix([(0, 1), (4, 5)])),
        # printed swap: |110⟩↔|100⟩ and |011⟩↔|001⟩
        "swap-printed": GateTarget("swap-printed", permutation_matrix([(1, 3), (4, 6)])),
        "swap-qubit-mode1": GateTarget("swap-qubit-mode1", _qubit_mode1_swap()),
        "identity": GateTarget("identity", identity(SUBSPACE_DIM)),
    }


TARGETS: Dict[str, GateTarget] = _build_targets()


def get_target(name: str) -> GateTarget:
    try:
        return TARGETS[name]
    except KeyError:
        raise UsageError(f"unknown target '{name}' (choose from {', '.join(sorted(TARGETS))})")


# ---- Evaluation ----

def step_unitary(step: Step, sigma_z_sign: int = 1) -> ComplexMatrix:
    return rotation_block(step.axis, step.sigma, sigma_z_sign) @ entangler_block(step.entangler)


def evaluate(seq: ControlSequence, sigma_z_sign: int = 1) -> ComplexMatrix:
    """Ordered product over steps; each step is rotation · entangler on the 8x8 blocks"""
    unitary = identity(SUBSPACE_DIM)
    for step in seq.steps:
        unitary = step_unitary(step, sigma_z_sign) @ unitary
    return unitary


def evaluate_full(seq: ControlSequence, n_max: int = 3, sigma_z_sign: int = 1) -> ComplexMatrix:
    """The same product built from full truncated-space operators"""
    factors = [
        qubit_rotation(step.axis, step.sigma, n_max, sigma_z_sign) @ entangler(step.entangler.mode, n_max)
        for step in seq.steps
    ]
    dim = 2 * (n_max + 1) ** 2
    return reduce(lambda acc, factor: factor @ acc, factors, identity(dim))


def gate_fidelity(produced: ComplexMatrix, target: ComplexMatrix) -> float:
    """|tr(V†U)| / 8, invariant under a global phase of either argument"""
    for label, matrix in (("produced", produced), ("target", target)):
        report = check_unitary(matrix, FIDELITY_UNITARY_TOL)
        if not report.passed:
            raise ContractViolation(
                f"{label} matrix is not unitary (deviation {report.max_deviation:.2e})"
            )
    produced = np.asarray(produced, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if produced.shape != target.shape:
        raise UsageError(f"shape mismatch {produced.shape} vs {target.shape}")
    return float(min(1.0, abs(np.trace(dagger(target) @ produced)) / produced.shape[0]))


# ---- Verification ----

class MatrixPayload(BaseModel):
    real: List[List[float]]
    imag: List[List[float]]

    @classmethod
    def from_matrix(cls, matrix: ComplexMatrix) -> "MatrixPayload":
        return cls(real=np.real(matrix).tolist(), imag=np.imag(matrix).tolist())

    def to_matrix(self) -> ComplexMatrix:
        return np.array(self.real, dtype=float) + 1j * np.array(self.imag, dtype=float)


class VerificationReport(BaseModel):
    target: str
    sequence: str
    step_count: int
    threshold: float = DEFAULT_THRESHOLD
    best_fidelity: float
    best_reading: str
    fidelity_per_reading: Dict[str, float]
    reproduced: bool
    discrepancy: Optional[str] = None
    produced_unitary: MatrixPayload
    target_reachability_residual: Optional[float] = Field(
        None, description="distance of the target from the reachable group (0 = reachable)"
    )


def verify(seq: ControlSequence, target: Union[GateTarget, str],
           threshold: float = DEFAULT_THRESHOLD) -> VerificationReport:
    """
    Evaluate the sequence under every reading and compare with the target.

    Returns:
        VerificationReport; when no reading reaches the threshold it carries a
        discrepancy message and the unitary the best reading actually produces
    """
    from synthesis import reachability_residual

    if isinstance(target, str):
        target = get_target(target)

    fidelities: Dict[str, float] = {}
    produced: Dict[str, ComplexMatrix] = {}
    for reading in ALL_READINGS:
        unitary = evaluate(apply_reading(seq, reading), reading.sigma_z_sign)
        fidelities[reading.label] = gate_fidelity(unitary, target.matrix)
        produced[reading.label] = unitary

    # max keeps the first reading on ties
    best_label = max(fidelities, key=fidelities.get)
    best = fidelities[best_label]
    reproduced = best >= threshold
    residual = reachability_residual(target.matrix)

    discrepancy = None
    if reproduced:
        logger.info(f"✅ {seq.name or 'sequence'} reproduces '{target.name}' (F = {best:.6f}, {best_label})")
    else:
        discrepancy = (
            f"no reading reaches F >= {threshold}: best {best:.6f} under {best_label}; "
            f"target reachability residual {residual:.3g}"
        )
        logger.warning(f"⚠️  {seq.name or 'sequence'} vs '{target.name}': {discrepancy}")

    return VerificationReport(
        target=target.name,
        sequence=seq.name,
        step_count=len(seq),
        threshold=threshold,
        best_fidelity=best,
        best_reading=best_label,
        fidelity_per_reading=fidelities,
        reproduced=reproduced,
        discrepancy=discrepancy,
        produced_unitary=MatrixPayload.from_matrix(produced[best_label]),
        target_reachability_residual=residual,
    )


# ---- Photonic factorization ----

@dataclass(frozen=True)
class PhotonicFactor:
    """W in the photonic basis {|11⟩, |10⟩, |01⟩, |00⟩}"""
    matrix: ComplexMatrix
    residual: float


def photonic_factor(unitary: ComplexMatrix) -> Optional[PhotonicFactor]:
    """Closest I₂ ⊗ W; None when the residual 1 − F exceeds 0.05"""
    unitary = np.asarray(unitary, dtype=complex)
    report = check_unitary(unitary, FIDELITY_UNITARY_TOL)
    if unitary.shape != (SUBSPACE_DIM, SUBSPACE_DIM) or not report.passed:
        raise ContractViolation("photonic_factor needs an 8x8 unitary")

    half = SUBSPACE_DIM // 2
    # max over W of |tr((I₂⊗W)† U)| = |tr(W† M)|, maximized by the polar factor of M
    block_sum = unitary[:half, :half] + unitary[half:, half:]
    left, singular_values, right_h = np.linalg.svd(block_sum)
    factor = left @ right_h
    residual = max(0.0, 1.0 - float(np.sum(singular_values)) / SUBSPACE_DIM)
    if residual > PHOTONIC_RESIDUAL_LIMIT:
        logger.debug(f"no photonic factorization (residual {residual:.3f})")
        return None
    return PhotonicFactor(matrix=factor, residual=residual)
