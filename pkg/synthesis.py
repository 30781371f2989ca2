"""
synthesis.py - Control sequence synthesis and reachability certificates
Finds σ vectors for 8x8 subspace targets by BFGS fidelity maximization over random restarts,
and measures which targets the primitives can reach at all
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from errors import UsageError
from fock_core import ComplexMatrix, check_unitary, commutator, dagger
from machine_model import (
    SUBSPACE_DIM,
    Axis,
    Entangler,
    entangler_block,
    free_phase_generator_block,
    restricted_coupling_generator,
    rotation_block,
    rotation_generator_block,
)
from sequence_engine import (
    CANONICAL_PATTERN,
    ControlSequence,
    GateTarget,
    PatternEntry,
    normalize_pattern,
)

logger = logging.getLogger(__name__)

# N² − 1 for N = 8, the nominal parameter count for arbitrary targets
FULL_PARAMETER_COUNT = 63
LIE_RANK_TOL = 1e-9
REACHABLE_RESIDUAL_TOL = 1e-6
TARGET_UNITARY_TOL = 1e-8

PATTERN_PRESETS: Dict[str, Tuple[PatternEntry, ...]] = {
    "xyz": CANONICAL_PATTERN,
    "xy": ((Entangler.A, Axis.X), (Entangler.B, Axis.Y)),
    "xz": ((Entangler.A, Axis.X), (Entangler.B, Axis.Z)),
    "yz": ((Entangler.A, Axis.Y), (Entangler.B, Axis.Z)),
}

ProgressCallback = Callable[[float, str], None]


def resolve_pattern(pattern: Union[str, Sequence, None]) -> Tuple[PatternEntry, ...]:
    if pattern is None:
        return CANONICAL_PATTERN
    if isinstance(pattern, str):
        try:
            return PATTERN_PRESETS[pattern]
        except KeyError:
            raise UsageError(f"unknown pattern preset '{pattern}' (choose from {', '.join(PATTERN_PRESETS)})")
    return normalize_pattern(pattern)


class OptimizationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    step_count: int = Field(72, ge=1)
    pattern: Union[str, List[Dict[str, str]]] = "xyz"
    restarts: int = Field(32, ge=1)
    max_iterations: int = Field(2000, ge=1)
    tolerance: float = Field(1e-8, gt=0)
    seed: int = 0
    sigma_z_sign: int = Field(1, description="+1 or -1")
    workers: int = Field(1, ge=1)
    allow_short_sequences: bool = False

    def resolved_pattern(self) -> Tuple[PatternEntry, ...]:
        return resolve_pattern(self.pattern)

    def check_length(self):
        if self.sigma_z_sign not in (1, -1):
            raise UsageError(f"sigma_z_sign must be +1 or -1, got {self.sigma_z_sign}")
        if self.step_count < FULL_PARAMETER_COUNT:
            if not self.allow_short_sequences:
                raise UsageError(
                    f"step_count {self.step_count} < {FULL_PARAMETER_COUNT}; "
                    f"set allow_short_sequences to run anyway"
                )
            logger.warning(
                f"⚠️  step_count {self.step_count} is below {FULL_PARAMETER_COUNT}; "
                f"generic targets may be out of reach"
            )


class SynthesisResult(BaseModel):
    target_name: str
    sigmas: List[float]
    pattern: List[Dict[str, str]]
    sigma_z_sign: int = 1
    infidelity: float
    converged: bool
    restarts_used: int
    best_restart: int
    iterations: int
    gradient_norm: float
    reachability_residual: float
    trace: List[float] = Field(default_factory=list)

    def to_sequence(self) -> ControlSequence:
        return ControlSequence.from_sigmas(self.sigmas, self.pattern, name=f"synth-{self.target_name}")


# ---- Fidelity and its gradient ----

def sequence_from_sigmas(sigmas: Sequence[float], pattern: Union[str, Sequence, None] = None,
                         name: str = "") -> ControlSequence:
    return ControlSequence.from_sigmas(sigmas, resolve_pattern(pattern), name=name)


def _target_matrix(target: Union[GateTarget, ComplexMatrix]) -> ComplexMatrix:
    if isinstance(target, GateTarget):
        return target.matrix
    return np.asarray(target, dtype=complex)


def fidelity_and_gradient(sigmas: Sequence[float], target: Union[GateTarget, ComplexMatrix],
                          pattern: Union[str, Sequence, None] = None,
                          sigma_z_sign: int = 1) -> Tuple[float, np.ndarray]:
    """
    F = |t|/8 with t = tr(V†U) and its exact derivative in every σ_k.

    With P_k the product of the first k steps and B_k = V†·S_M…S_{k+1},
    ∂t/∂σ_k = tr(B_k·(−iG_k)·P_k) and ∂F = Re(t̄·∂t)/(8|t|).
    """
    entries = resolve_pattern(pattern)
    target_h = dagger(_target_matrix(target))
    count = len(sigmas)

    steps = []
    generators = []
    prefixes = [np.eye(SUBSPACE_DIM, dtype=complex)]
    for k, sigma in enumerate(sigmas):
        tag, axis = entries[k % len(entries)]
        step = rotation_block(axis, float(sigma), sigma_z_sign) @ entangler_block(tag)
        steps.append(step)
        generators.append(rotation_generator_block(axis, sigma_z_sign))
        prefixes.append(step @ prefixes[-1])

    trace = np.trace(target_h @ prefixes[-1])
    magnitude = abs(trace)
    fidelity = magnitude / SUBSPACE_DIM
    gradient = np.zeros(count)
    if magnitude == 0.0:
        return fidelity, gradient

    backward = target_h
    for k in range(count - 1, -1, -1):
        d_trace = -1j * np.trace(backward @ generators[k] @ prefixes[k + 1])
        gradient[k] = float(np.real(np.conj(trace) * d_trace)) / (magnitude * SUBSPACE_DIM)
        backward = backward @ steps[k]
    return fidelity, gradient


def fidelity_gradient(sigmas: Sequence[float], target: Union[GateTarget, ComplexMatrix],
                      pattern: Union[str, Sequence, None] = None, sigma_z_sign: int = 1) -> np.ndarray:
    return fidelity_and_gradient(sigmas, target, pattern, sigma_z_sign)[1]


def infidelity(sigmas: Sequence[float], target: Union[GateTarget, ComplexMatrix],
               pattern: Union[str, Sequence, None] = None, sigma_z_sign: int = 1) -> float:
    return 1.0 - fidelity_and_gradient(sigmas, target, pattern, sigma_z_sign)[0]


# ---- Optimizer ----

@dataclass
class RestartOutcome:
    index: int
    sigmas: np.ndarray
    infidelity: float
    iterations: int
    gradient_norm: float
    trace: List[float] = field(default_factory=list)

    def converged(self, tolerance: float) -> bool:
        return self.infidelity < tolerance


def _run_restart(index: int, target: ComplexMatrix, entries: Tuple[PatternEntry, ...],
                 config: OptimizationConfig) -> RestartOutcome:
    rng = np.random.default_rng([config.seed, index])
    start = rng.uniform(-math.pi, math.pi, size=config.step_count)

    best = {"value": math.inf, "x": start.copy(), "grad": np.zeros_like(start)}
    trace: List[float] = []

    def objective(x: np.ndarray) -> Tuple[float, np.ndarray]:
        fidelity, gradient = fidelity_and_gradient(x, target, entries, config.sigma_z_sign)
        value = 1.0 - fidelity
        if value < best["value"]:
            best.update(value=value, x=x.copy(), grad=gradient.copy())
        return value, -gradient

    def callback(intermediate_result):
        trace.append(float(intermediate_result.fun))
        if best["value"] < config.tolerance:
            raise StopIteration

    minimize(
        objective,
        start,
        jac=True,
        method="BFGS",
        callback=callback,
        options={"maxiter": config.max_iterations, "gtol": 1e-12},
    )
    return RestartOutcome(
        index=index,
        sigmas=best["x"],
        infidelity=max(0.0, float(best["value"])),
        iterations=len(trace),
        gradient_norm=float(np.linalg.norm(best["grad"])),
        trace=trace,
    )


def synthesize(target: Union[GateTarget, ComplexMatrix], config: Optional[OptimizationConfig] = None,
               progress: Optional[ProgressCallback] = None, target_name: Optional[str] = None) -> SynthesisResult:
    """
    Maximize the phase-invariant fidelity to the target over random restarts.

    Restart r draws its start from the RNG stream seeded by (seed, r). Restarts run in
    batches of `workers`; the first restart in index order under `tolerance` wins, so the
    result does not depend on the worker count.

    Raises:
        UsageError: non-unitary target or step_count below 63 without allow_short_sequences
    """
    config = config or OptimizationConfig()
    config.check_length()
    entries = config.resolved_pattern()

    matrix = _target_matrix(target)
    name = target_name or (target.name if isinstance(target, GateTarget) else "custom")
    if matrix.shape != (SUBSPACE_DIM, SUBSPACE_DIM):
        raise UsageError(f"synthesis target must be 8x8, got {matrix.shape}")
    report = check_unitary(matrix, TARGET_UNITARY_TOL)
    if not report.passed:
        raise UsageError(f"synthesis target is not unitary (deviation {report.max_deviation:.2e})")

    residual = reachability_residual(matrix)
    if residual > REACHABLE_RESIDUAL_TOL:
        logger.warning(
            f"⚠️  target '{name}' lies outside the reachable group (residual {residual:.3g}); "
            f"synthesis cannot reach F = 1"
        )

    logger.info(
        f"Synthesizing '{name}': M={config.step_count}, pattern={config.pattern}, "
        f"restarts={config.restarts}, workers={config.workers}"
    )

    outcomes: List[RestartOutcome] = []
    winner: Optional[RestartOutcome] = None
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for batch_start in range(0, config.restarts, config.workers):
            indices = range(batch_start, min(batch_start + config.workers, config.restarts))
            batch = list(pool.map(lambda i: _run_restart(i, matrix, entries, config), indices))
            outcomes.extend(batch)
            for outcome in batch:
                if progress:
                    progress(
                        (outcome.index + 1) / config.restarts,
                        f"restart {outcome.index}: infidelity {outcome.infidelity:.3e}",
                    )
            winner = next((o for o in batch if o.converged(config.tolerance)), None)
            if winner:
                break

    converged = winner is not None
    if winner is None:
        winner = min(outcomes, key=lambda o: (o.infidelity, o.index))
        logger.warning(
            f"⚠️  '{name}' did not converge: best infidelity {winner.infidelity:.3e} "
            f"after {len(outcomes)} restarts"
        )
    else:
        logger.info(f"✅ '{name}' converged at restart {winner.index} (infidelity {winner.infidelity:.2e})")

    return SynthesisResult(
        target_name=name,
        sigmas=[float(v) for v in winner.sigmas],
        pattern=[{"entangler": tag.value, "axis": axis.value} for tag, axis in entries],
        sigma_z_sign=config.sigma_z_sign,
        infidelity=winner.infidelity,
        converged=converged,
        restarts_used=winner.index + 1 if converged else len(outcomes),
        best_restart=winner.index,
        iterations=winner.iterations,
        gradient_norm=winner.gradient_norm,
        reachability_residual=residual,
        trace=winner.trace,
    )


def write_trace(result: SynthesisResult, path: Union[str, Path]):
    """One `iteration infidelity` line per optimizer iteration of the winning restart"""
    lines = [f"{i} {value:.12e}" for i, value in enumerate(result.trace, start=1)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# ---- Reachability ----

def pattern_generators(pattern: Union[str, Sequence, None] = None, sigma_z_sign: int = 1,
                       include_free_phase: bool = False) -> List[ComplexMatrix]:
    """Hermitian generators on the subspace for the entanglers and axes a pattern uses"""
    entries = resolve_pattern(pattern)
    generators = []
    for tag in dict.fromkeys(tag for tag, _ in entries):
        generators.append(restricted_coupling_generator(tag.mode))
    for axis in dict.fromkeys(axis for _, axis in entries):
        generators.append(rotation_generator_block(axis, sigma_z_sign))
    if include_free_phase:
        generators.append(free_phase_generator_block())
    return generators


def _as_real_vector(matrix: ComplexMatrix) -> np.ndarray:
    return np.concatenate([matrix.real.ravel(), matrix.imag.ravel()])


def controllability_rank(pattern: Union[str, Sequence, None] = None,
                         generators: Optional[Sequence[ComplexMatrix]] = None,
                         include_free_phase: bool = False, tol: float = LIE_RANK_TOL) -> int:
    """
    Real dimension of the Lie algebra generated by {−iH} for the given hermitian generators.

    Breadth-first commutator closure with Gram-Schmidt against the current basis;
    the final count is the numerical rank of the stacked basis.
    """
    if generators is None:
        generators = pattern_generators(pattern, include_free_phase=include_free_phase)
    if len(generators) == 0:
        return 0

    basis_vectors: List[np.ndarray] = []
    basis: List[ComplexMatrix] = []

    def add(element: ComplexMatrix) -> Optional[ComplexMatrix]:
        vector = _as_real_vector(element)
        for _ in range(2):
            for b in basis_vectors:
                vector = vector - np.dot(vector, b) * b
        norm = np.linalg.norm(vector)
        if norm <= tol:
            return None
        vector = vector / norm
        half = vector.size // 2
        normalized = (vector[:half] + 1j * vector[half:]).reshape(element.shape)
        basis_vectors.append(vector)
        basis.append(normalized)
        return normalized

    frontier = [m for m in (add(-1j * np.asarray(g, dtype=complex)) for g in generators) if m is not None]
    while frontier:
        next_frontier = []
        for x in frontier:
            for y in list(basis):
                added = add(commutator(x, y))
                if added is not None:
                    next_frontier.append(added)
        frontier = next_frontier

    singular_values = np.linalg.svd(np.array(basis_vectors), compute_uv=False)
    rank = int(np.sum(singular_values > tol * max(1.0, singular_values[0])))
    logger.debug(f"Lie closure of {len(generators)} generators: dimension {rank}")
    return rank


def invariant_form() -> np.ndarray:
    """
    Antisymmetric J with XᵀJ + JX = 0 for every primitive generator X.

    J pairs each basis state with its bit complement: J[i, 7−i] = −1 for i < 4, +1 for i ≥ 4.
    """
    form = np.zeros((SUBSPACE_DIM, SUBSPACE_DIM))
    for i in range(SUBSPACE_DIM):
        form[i, SUBSPACE_DIM - 1 - i] = -1.0 if i < SUBSPACE_DIM // 2 else 1.0
    return form


def reachability_residual(unitary: ComplexMatrix) -> float:
    """
    ‖UᵀJU − cJ‖_F / ‖J‖_F with c chosen optimally; 0 for reachable targets up to global phase.
    """
    unitary = np.asarray(unitary, dtype=complex)
    form = invariant_form()
    transformed = unitary.T @ form @ unitary
    scale = np.sum(form * transformed) / np.sum(form * form)
    return float(np.linalg.norm(transformed - scale * form) / np.linalg.norm(form))
