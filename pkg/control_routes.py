"""
Machine control API routes
Verification, dynamics validation, resource estimation and background synthesis jobs
"""

import logging
import queue
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field, ValidationError

from errors import CavityMachineError, CompilationError, ContractViolation, UsageError
from job_queue import job_queue
from machine_config import merge_config, run_config_store

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["Machine"])


class SequenceSource(BaseModel):
    """Built-in name or an inline sequence document"""
    builtin: Optional[str] = Field(None, description="cnot72 or swap72")
    document: Optional[Dict[str, Any]] = None

    def load(self):
        from sequence_io import SequenceDocument, load_sequence

        if self.document is not None:
            return SequenceDocument.model_validate(self.document)
        if self.builtin:
            return load_sequence(self.builtin)
        raise UsageError("sequence needs either 'builtin' or 'document'")


class VerifyRequest(BaseModel):
    sequence: SequenceSource = Field(default_factory=lambda: SequenceSource(builtin="cnot72"))
    target: str = "cnot"
    threshold: float = Field(0.98, gt=0, le=1)


class ValidateRequest(BaseModel):
    sequence: SequenceSource = Field(default_factory=lambda: SequenceSource(builtin="cnot72"))
    machine: Dict[str, Any] = Field(default_factory=dict)
    ratios: Optional[List[float]] = None
    coupling: Literal["full", "resonant_only"] = "full"


class EstimateRequest(BaseModel):
    resources: Dict[str, Any] = Field(default_factory=dict)


class CompileRequest(BaseModel):
    circuit: str = Field(..., description="CNOT c t / LOCAL m alpha beta gamma lines")
    mode_count: Optional[int] = Field(None, ge=1)
    resources: Dict[str, Any] = Field(default_factory=dict)


class SynthesizeRequest(BaseModel):
    target: Optional[str] = Field(None, description="named target")
    matrix_real: Optional[List[List[float]]] = None
    matrix_imag: Optional[List[List[float]]] = None
    optimization: Dict[str, Any] = Field(default_factory=dict)


def _raise_http(e: Exception):
    if isinstance(e, HTTPException):
        raise e
    if isinstance(e, (UsageError, ContractViolation, CompilationError, ValidationError)):
        raise HTTPException(status_code=400, detail=str(e))
    if isinstance(e, CavityMachineError):
        raise HTTPException(status_code=422, detail=str(e))
    logger.error(f"❌ unexpected error: {e}")
    raise HTTPException(status_code=500, detail=str(e))


@router.post("/verify")
async def verify_sequence(request: VerifyRequest):
    """Fidelity of a sequence against a named target under every reading"""
    from sequence_engine import verify

    try:
        document = request.sequence.load()
        report = verify(document.printed_sequence(), request.target, request.threshold)
        return report.model_dump()
    except Exception as e:
        _raise_http(e)


@router.post("/validate")
async def validate_sequence(request: ValidateRequest):
    from dynamics_validator import RotationPolicy, ValidationSweep, error_scaling_sweep, validate

    try:
        document = request.sequence.load()
        seq, sign = document.resolved()
        machine = run_config_store.machine({**request.machine, "sigma_z_sign": sign})
        policy = RotationPolicy.from_defaults()
        if request.ratios:
            reports = error_scaling_sweep(seq, machine.rabi_1, request.ratios, machine.n_max, policy,
                                          workers=len(request.ratios), sigma_z_sign=sign)
            return ValidationSweep(ratios=request.ratios, reports=reports).model_dump()
        return validate(seq, machine, machine.n_max, policy, request.coupling).model_dump()
    except Exception as e:
        _raise_http(e)


@router.post("/estimate")
async def estimate(request: EstimateRequest):
    from processor import ResourceParams, estimate_resources

    try:
        return estimate_resources(ResourceParams.from_defaults(**request.resources)).model_dump()
    except Exception as e:
        _raise_http(e)


@router.post("/compile")
async def compile_circuit_route(request: CompileRequest):
    from processor import ResourceParams, compile_circuit, parse_circuit

    try:
        params = ResourceParams.from_defaults(**request.resources)
        return compile_circuit(parse_circuit(request.circuit), params, request.mode_count).model_dump()
    except Exception as e:
        _raise_http(e)


def run_synthesis_job(params: Dict[str, Any], progress) -> Dict[str, Any]:
    """Job handler: params carry either a target name or a matrix, plus optimization overrides"""
    from sequence_engine import get_target
    from synthesis import OptimizationConfig, synthesize

    config = OptimizationConfig(**merge_config(run_config_store.section("optimization"),
                                               params.get("optimization", {})))
    if params.get("target"):
        target = get_target(params["target"])
        result = synthesize(target, config, progress)
    else:
        matrix = np.array(params["matrix_real"]) + 1j * np.array(params["matrix_imag"])
        result = synthesize(matrix, config, progress, target_name="custom")
    return result.model_dump()


@router.post("/synthesize", status_code=202)
async def submit_synthesis(request: SynthesizeRequest):
    """
    Queue a synthesis run and return immediately.
    Poll /api/jobs/{job_id} for progress and the result.
    """
    from sequence_engine import get_target
    from synthesis import OptimizationConfig

    try:
        if request.target:
            get_target(request.target)
        elif request.matrix_real is None or request.matrix_imag is None:
            raise UsageError("synthesize needs 'target' or both 'matrix_real' and 'matrix_imag'")
        OptimizationConfig(**merge_config(run_config_store.section("optimization"), request.optimization))
    except Exception as e:
        _raise_http(e)

    try:
        job_id = job_queue.enqueue("synthesize", request.model_dump())
    except queue.Full:
        raise HTTPException(status_code=429, detail="Job queue is full - please try again later")

    return {
        "job_id": job_id,
        "status": "queued",
        "message": f"Synthesis queued. Check /api/jobs/{job_id} for status.",
    }


@router.get("/jobs/{job_id}")
async def get_job_status(job_id: str):
    job = job_queue.get_status(job_id)
    if not job:
        raise HTTPException(status_code=404, detail="Job not found")
    return job.as_dict()


@router.get("/jobs")
async def get_queue_stats():
    return {
        "queue_depth": job_queue.get_queue_depth(),
        "running_count": job_queue.get_running_count(),
        "max_queue_size": job_queue.max_queue_size,
    }
