"""
dynamics_validator.py - Time-domain check of the invariant-subspace model
Compiles control sequences into piecewise-constant pulse schedules, propagates the full
cavity + qubit Hamiltonian and compares with the ideal 8x8 product including frame phases
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import CompilationError, UsageError
from fock_core import ComplexMatrix, FockConfig, dagger, identity, matrix_exponential
from machine_config import MachineConfig, run_config_store
from machine_model import SUBSPACE_DIM, Axis, entangler_block, machine_model
from sequence_engine import ControlSequence, Entangler

logger = logging.getLogger(__name__)

# slack when rounding a duration up to whole 2π/Δ periods
PERIOD_ROUNDING_SLACK = 1e-12


class SegmentKind(str, Enum):
    RESONANT = "resonant"
    ROTATION = "rotation"


@dataclass(frozen=True)
class Segment:
    """Constant δ, X, Y over one interval; mode is set for resonant segments only"""
    duration: float
    delta: float
    x_drive: float
    y_drive: float
    kind: SegmentKind
    step_index: int
    mode: Optional[int] = None


@dataclass(frozen=True)
class PulseSchedule:
    segments: Tuple[Segment, ...]
    config: MachineConfig
    reverse_time: bool = False

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def inverted(self) -> "PulseSchedule":
        """The schedule that undoes this one (segments run backwards under −H)"""
        return replace(self, reverse_time=not self.reverse_time)


class RotationPolicy(BaseModel):
    """Drive amplitudes of rotation segments as fractions of Δ"""
    model_config = ConfigDict(extra="forbid")

    drive_fraction: float = Field(0.1, gt=0, description="nominal |X|, |Y| / Δ")
    detuning_fraction: float = Field(0.1, gt=0, description="nominal |δ| / Δ for z rotations")
    max_drive_fraction: float = Field(0.25, gt=0, description="hard cap on any rotation amplitude / Δ")
    fixed_periods: Optional[int] = Field(None, ge=1, description="force every rotation to this many 2π/Δ periods")

    @classmethod
    def from_defaults(cls) -> "RotationPolicy":
        return cls(**run_config_store.section("rotation_policy"))


class ValidationReport(BaseModel):
    leakage_out_of_subspace: float
    strict_infidelity: float
    phase_robust_infidelity: float
    off_resonance_ratio: float
    n_max: int
    segment_count: int
    total_duration: float
    coupling: str = "full"


# ---- Compilation ----

def _rotation_segment(step_index: int, axis: Axis, sigma: float, config: MachineConfig,
                      policy: RotationPolicy) -> Tuple[Segment, float]:
    period = 2.0 * math.pi / config.half_detuning
    if axis is Axis.Z:
        # δσz/2 integrates to σσz
        nominal_duration = 2.0 * abs(sigma) / (policy.detuning_fraction * config.half_detuning)
    else:
        nominal_duration = abs(sigma) / (policy.drive_fraction * config.half_detuning)

    if policy.fixed_periods is not None:
        periods = policy.fixed_periods if sigma != 0.0 else 0
    else:
        periods = math.ceil(nominal_duration / period - PERIOD_ROUNDING_SLACK)
    duration = periods * period

    delta = x_drive = y_drive = 0.0
    if duration > 0.0:
        if axis is Axis.X:
            x_drive = sigma / duration
        elif axis is Axis.Y:
            y_drive = sigma / duration
        else:
            delta = 2.0 * sigma / duration
    amplitude = max(abs(x_drive), abs(y_drive), abs(delta))
    segment = Segment(duration, delta, x_drive, y_drive, SegmentKind.ROTATION, step_index)
    return segment, amplitude / config.half_detuning


def compile_schedule(seq: ControlSequence, config: MachineConfig,
                     policy: Optional[RotationPolicy] = None) -> PulseSchedule:
    """
    One resonant segment then one rotation segment per step.

    Resonant: δ = resonance_detuning(mode) for τ = 2π/(√2Ω_mode), no drive.
    Rotation: ∫X = σ, ∫Y = σ or ∫δ/2 = σ with the duration rounded up to whole 2π/Δ periods.

    Raises:
        CompilationError: some rotation amplitude exceeds max_drive_fraction·Δ
    """
    policy = policy or RotationPolicy()
    segments: List[Segment] = []
    over_cap: List[int] = []
    for index, step in enumerate(seq.steps):
        mode = step.entangler.mode
        segments.append(Segment(
            duration=config.entangler_duration(mode),
            delta=config.resonance_detuning(mode),
            x_drive=0.0,
            y_drive=0.0,
            kind=SegmentKind.RESONANT,
            step_index=index,
            mode=mode,
        ))
        rotation, fraction = _rotation_segment(index, step.axis, step.sigma, config, policy)
        if fraction > policy.max_drive_fraction:
            over_cap.append(index)
        segments.append(rotation)

    if over_cap:
        raise CompilationError(
            f"rotation amplitude above {policy.max_drive_fraction}·Δ at steps {over_cap}",
            steps=over_cap,
        )
    logger.debug(f"Compiled {len(seq)} steps into {len(segments)} segments")
    return PulseSchedule(segments=tuple(segments), config=config)


# ---- Propagation ----

def hamiltonian(segment: Segment, config: MachineConfig, n_max: Optional[int] = None,
                coupling: str = "full") -> ComplexMatrix:
    """
    Rotating-frame Hamiltonian of one segment:
    Δ(n̂₁ − n̂₂) + δσz/2 + Xσx + Yσy + Ω₁(â†σ⁻ + âσ⁺) + Ω₂(b̂†σ⁻ + b̂σ⁺).

    coupling = "full" keeps both cavity couplings everywhere, "resonant_only" keeps only the
    addressed mode during resonant segments, "none" drops them.
    """
    model = machine_model(n_max if n_max is not None else config.n_max)
    sign = config.sigma_z_sign
    h = (
        config.half_detuning * (model.number_operator(1) - model.number_operator(2))
        + 0.5 * segment.delta * model.qubit_operator("z", sign)
        + segment.x_drive * model.qubit_operator("x")
        + segment.y_drive * model.qubit_operator("y")
    )
    if coupling == "full":
        modes = (1, 2)
    elif coupling == "resonant_only":
        modes = (segment.mode,) if segment.kind is SegmentKind.RESONANT else ()
    elif coupling == "none":
        modes = ()
    else:
        raise UsageError(f"coupling must be 'full', 'resonant_only' or 'none', got '{coupling}'")
    for mode in modes:
        h = h + config.rabi(mode) * model.coupling_generator(mode)
    return h


def propagate(schedule: PulseSchedule, n_max: Optional[int] = None, coupling: str = "full",
              direction: int = 1) -> ComplexMatrix:
    """Ordered product of segment exponentials; direction = −1 gives the exact inverse"""
    if direction not in (1, -1):
        raise UsageError(f"direction must be +1 or -1, got {direction}")
    n_max = n_max if n_max is not None else schedule.config.n_max
    FockConfig(n_max).require_trapping_level()
    if schedule.reverse_time:
        direction = -direction

    segments = schedule.segments if direction > 0 else tuple(reversed(schedule.segments))
    unitary = identity(machine_model(n_max).dim)
    for segment in segments:
        if segment.duration == 0.0:
            continue
        h = hamiltonian(segment, schedule.config, n_max, coupling)
        unitary = matrix_exponential(h, direction * segment.duration) @ unitary
    return unitary


def ideal_subspace_unitary(schedule: PulseSchedule) -> ComplexMatrix:
    """
    Ideal 8x8 product: uncoupled frame evolution of each segment, times the Â/B̂ block
    for resonant segments.
    """
    # uncoupled evolution is block diagonal in the Fock labels, so n_max = 1 is exact
    model = machine_model(1)
    unitary = identity(SUBSPACE_DIM)
    for segment in schedule.segments:
        if segment.duration == 0.0:
            continue
        frame, _ = model.restrict(matrix_exponential(
            hamiltonian(segment, schedule.config, model.n_max, coupling="none"), segment.duration
        ))
        if segment.kind is SegmentKind.RESONANT:
            tag = Entangler.A if segment.mode == 1 else Entangler.B
            frame = frame @ entangler_block(tag)
        unitary = frame @ unitary
    return unitary


def validate(seq: ControlSequence, config: MachineConfig, n_max: Optional[int] = None,
             policy: Optional[RotationPolicy] = None, coupling: str = "full") -> ValidationReport:
    """
    Compile, propagate the full Hamiltonian and compare with the ideal subspace product.

    Strict infidelity compares traces; phase-robust infidelity lets every column carry its
    own phase: 1 − Σⱼ |(I†U)ⱼⱼ| / 8.
    """
    n_max = n_max if n_max is not None else config.n_max
    FockConfig(n_max).require_trapping_level()
    if config.off_resonance_warning:
        logger.warning(
            f"⚠️  Ω/2Δ = {config.off_resonance_ratio:.3g}: off-resonant error will dominate"
        )
    schedule = compile_schedule(seq, config, policy)
    produced, leakage = machine_model(n_max).restrict(propagate(schedule, n_max, coupling))
    ideal = ideal_subspace_unitary(schedule)

    overlap = dagger(ideal) @ produced
    strict = 1.0 - abs(np.trace(overlap)) / SUBSPACE_DIM
    robust = 1.0 - float(np.sum(np.abs(np.diag(overlap)))) / SUBSPACE_DIM

    report = ValidationReport(
        leakage_out_of_subspace=leakage,
        strict_infidelity=max(0.0, float(strict)),
        phase_robust_infidelity=max(0.0, robust),
        off_resonance_ratio=config.off_resonance_ratio,
        n_max=n_max,
        segment_count=len(schedule.segments),
        total_duration=schedule.total_duration,
        coupling=coupling,
    )
    logger.info(
        f"Validated '{seq.name or 'sequence'}' at Δ/Ω = {1.0 / (2.0 * config.off_resonance_ratio):.3g}: "
        f"phase-robust infidelity {report.phase_robust_infidelity:.3e}, leakage {leakage:.3e}"
    )
    return report


def error_scaling_sweep(seq: ControlSequence, rabi: float, ratios: Sequence[float], n_max: int = 3,
                        policy: Optional[RotationPolicy] = None, workers: int = 1,
                        sigma_z_sign: int = 1) -> List[ValidationReport]:
    """One validation per Δ/Ω ratio with Ω₁ = Ω₂ = rabi; results keep the order of ratios"""

    def run(ratio: float) -> ValidationReport:
        config = MachineConfig(rabi_1=rabi, rabi_2=rabi, half_detuning=ratio * rabi,
                               n_max=n_max, sigma_z_sign=sigma_z_sign)
        return validate(seq, config, n_max, policy)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run, ratios))


class ValidationSweep(BaseModel):
    ratios: List[float]
    reports: List[ValidationReport]
