"""
Machine and run configuration
Physical parameters of the cavity + qubit machine and the defaults every command starts from
"""

import copy
import json
import logging
import math
import os
from typing import Dict, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from errors import UsageError
from fock_core import FockConfig

logger = logging.getLogger(__name__)

OFF_RESONANCE_WARNING_RATIO = 0.1

# Default run configuration
# Rabi frequencies follow the quoted ~100 MHz hardware scale, Δ = 50·Ω
DEFAULT_RUN_CONF = {
    "machine": {
        "rabi_1": 1.0e8,
        "rabi_2": 1.0e8,
        "half_detuning": 5.0e9,
        "n_max": 3,
        "sigma_z_sign": 1,
    },
    "optimization": {
        "step_count": 72,
        "pattern": "xyz",
        "restarts": 32,
        "max_iterations": 2000,
        "tolerance": 1e-8,
        "seed": 0,
        "workers": 1,
    },
    "resources": {
        "quality_factor": 1.0e5,
        "rabi": 1.0e8,
        "coherence_time": 1.0e-4,
        "band_min": 5.0e9,
        "band_max": 15.0e9,
        "mode_spacing": 1.0e9,
        "ops_per_gate": 72,
        "rotation_overhead": 1.0,
    },
    "rotation_policy": {
        "drive_fraction": 0.1,
        "detuning_fraction": 0.1,
        "max_drive_fraction": 0.25,
    },
}


class MachineConfig(BaseModel):
    """Ω₁, Ω₂, Δ = (ω₁−ω₂)/2 in rad/s plus the Fock truncation"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    rabi_1: float = Field(..., gt=0, description="vacuum Rabi frequency of mode 1 (rad/s)")
    rabi_2: float = Field(..., gt=0, description="vacuum Rabi frequency of mode 2 (rad/s)")
    half_detuning: float = Field(..., gt=0, description="Δ = (ω₁−ω₂)/2 (rad/s)")
    n_max: int = Field(3, ge=1, description="highest retained Fock level per mode")
    sigma_z_sign: Literal[1, -1] = Field(1, description="+1: σz = 2σ⁻σ⁺−1 (+1 on |g⟩)")

    @property
    def off_resonance_ratio(self) -> float:
        return max(self.rabi_1, self.rabi_2) / (2.0 * self.half_detuning)

    @property
    def off_resonance_warning(self) -> bool:
        return self.off_resonance_ratio > OFF_RESONANCE_WARNING_RATIO

    @property
    def fock_config(self) -> FockConfig:
        return FockConfig(n_max=self.n_max, mode_count=2)

    def rabi(self, mode: int) -> float:
        if mode == 1:
            return self.rabi_1
        if mode == 2:
            return self.rabi_2
        raise UsageError(f"mode must be 1 or 2, got {mode}")

    def entangler_duration(self, mode: int) -> float:
        """τ with τ·Ω·√2 = 2π (trapping at photon number 2)"""
        return 2.0 * math.pi / (math.sqrt(2.0) * self.rabi(mode))

    def resonance_detuning(self, mode: int) -> float:
        """
        Qubit detuning δ that puts the qubit in resonance with a mode.

        With σz = s·(+1 on |g⟩) the |e,n⟩ ↔ |g,n+1⟩ doublet of mode 1 is degenerate
        at δ = −s·Δ, that of mode 2 at δ = +s·Δ.
        """
        if mode not in (1, 2):
            raise UsageError(f"mode must be 1 or 2, got {mode}")
        sign = -1.0 if mode == 1 else 1.0
        return sign * self.sigma_z_sign * self.half_detuning

    def with_ratio(self, ratio: float) -> "MachineConfig":
        """Same couplings, Δ set to ratio·max(Ω₁, Ω₂)"""
        return self.model_copy(update={"half_detuning": ratio * max(self.rabi_1, self.rabi_2)})


def merge_config(base: Dict, override: Dict) -> Dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


class RunConfigStore:
    """Run defaults from DEFAULT_RUN_CONF, overlaid by the CAVITY_CONF environment JSON"""

    def __init__(self):
        load_dotenv()
        self.config = self._load_config()

    def _load_config(self) -> Dict:
        conf_json = os.getenv("CAVITY_CONF")

        if conf_json:
            try:
                return merge_config(DEFAULT_RUN_CONF, json.loads(conf_json))
            except (json.JSONDecodeError, AttributeError) as e:
                logger.warning(f"⚠️  Invalid CAVITY_CONF JSON: {e}")
                logger.warning("Using default run configuration")

        return copy.deepcopy(DEFAULT_RUN_CONF)

    def section(self, name: str) -> Dict:
        return copy.deepcopy(self.config.get(name, {}))

    def machine(self, overrides: Optional[Dict] = None) -> MachineConfig:
        values = self.section("machine")
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        config = MachineConfig(**values)
        if config.off_resonance_warning:
            logger.warning(
                f"⚠️  Off-resonance ratio Ω/2Δ = {config.off_resonance_ratio:.3g} exceeds "
                f"{OFF_RESONANCE_WARNING_RATIO}"
            )
        return config

    def get_log_level(self) -> str:
        return os.getenv("LOG_LEVEL", "INFO").upper()

    def get_job_workers(self) -> int:
        return int(os.getenv("JOB_WORKERS", "2"))

    def get_job_queue_size(self) -> int:
        return int(os.getenv("JOB_QUEUE_SIZE", "20"))


# Global instance
run_config_store = RunConfigStore()
