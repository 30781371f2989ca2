#!/usr/bin/env python3
"""
cli.py - Command-line entry point
verify / synthesize / validate / estimate / compile

Exit codes: 0 success, 1 quantitative failure, 2 usage error (no report written)
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import CavityMachineError, SequenceFormatError, UsageError
from machine_config import merge_config, run_config_store

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger("cli")

# target checked by verify when --target is not given
DEFAULT_TARGETS = {"cnot72": "cnot", "swap72": "swap-printed"}

OUTPUT_PATHS = ("output", "trace", "report", "schedule_csv")


class RunConfig(BaseModel):
    """One CLI invocation; paths are resolved before anything runs"""
    model_config = ConfigDict(extra="forbid")

    command: Literal["verify", "synthesize", "validate", "estimate", "compile"]
    sequence: Optional[str] = None
    target: Optional[str] = None
    circuit: Optional[Path] = None
    output: Optional[Path] = None
    trace: Optional[Path] = None
    report: Optional[Path] = None
    schedule_csv: Optional[Path] = None
    threshold: float = Field(0.98, gt=0, le=1)
    max_infidelity: Optional[float] = Field(None, ge=0)
    ratios: Optional[List[float]] = None
    coupling: Literal["full", "resonant_only"] = "full"
    mode_count: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None
    machine: Dict[str, Any] = Field(default_factory=dict)
    optimization: Dict[str, Any] = Field(default_factory=dict)
    resources: Dict[str, Any] = Field(default_factory=dict)

    def resolve_paths(self) -> "RunConfig":
        updates = {}
        for name in ("circuit",) + OUTPUT_PATHS:
            value = getattr(self, name)
            if value is not None:
                path = value.expanduser().resolve()
                if name in OUTPUT_PATHS and not path.parent.is_dir():
                    raise UsageError(f"{name}: directory {path.parent} does not exist")
                updates[name] = path
        sequence = self.sequence
        if sequence and Path(sequence).expanduser().is_file():
            updates["sequence"] = str(Path(sequence).expanduser().resolve())
        return self.model_copy(update=updates)


# ---- Commands ----

def _verify(config: RunConfig) -> int:
    from sequence_engine import verify
    from sequence_io import load_sequence, write_report

    document = load_sequence(config.sequence or "cnot72")
    target = config.target or DEFAULT_TARGETS.get(document.name, "cnot")
    report = verify(document.printed_sequence(), target, config.threshold)

    print(f"Sequence '{report.sequence}' vs target '{report.target}' ({report.step_count} steps)")
    for label, fidelity in report.fidelity_per_reading.items():
        marker = "←" if label == report.best_reading else " "
        print(f"  {label:<18} F = {fidelity:.6f} {marker}")
    if report.reproduced:
        print(f"✅ reproduced: best F = {report.best_fidelity:.6f} >= {report.threshold}")
    else:
        print(f"⚠️  discrepancy: {report.discrepancy}")

    if config.output:
        write_report(report, config.output)
    return EXIT_OK if report.reproduced else EXIT_FAILURE


def _synthesize(config: RunConfig) -> int:
    from sequence_engine import get_target
    from sequence_io import SequenceDocument, PatternItem, save_sequence, write_report
    from synthesis import OptimizationConfig, synthesize, write_trace

    if not config.target:
        raise UsageError("synthesize needs --target")
    target = get_target(config.target)
    values = merge_config(run_config_store.section("optimization"), config.optimization)
    if config.seed is not None:
        values["seed"] = config.seed
    optimization = OptimizationConfig(**values)

    def progress(fraction: float, message: str):
        logger.info(f"[{fraction:5.1%}] {message}")

    result = synthesize(target, optimization, progress)
    status = "✅ converged" if result.converged else "⚠️  not converged"
    print(f"{status}: infidelity {result.infidelity:.3e} at restart {result.best_restart} "
          f"({result.iterations} iterations, reachability residual {result.reachability_residual:.3g})")

    if config.output:
        document = SequenceDocument(
            name=f"synth-{result.target_name}",
            pattern=[PatternItem(**item) for item in result.pattern],
            sigmas=result.sigmas,
            convention={"sigma_order": "printed-first", "sigma_z_sign": result.sigma_z_sign},
        )
        save_sequence(document, config.output)
    if config.trace:
        write_trace(result, config.trace)
    if config.report:
        write_report(result, config.report)
    return EXIT_OK if result.converged else EXIT_FAILURE


def _validate(config: RunConfig) -> int:
    from dynamics_validator import (
        RotationPolicy,
        ValidationSweep,
        compile_schedule,
        error_scaling_sweep,
        validate,
    )
    from sequence_io import export_schedule_csv, load_sequence, write_report

    document = load_sequence(config.sequence or "cnot72")
    seq, sign = document.resolved()
    machine = run_config_store.machine({**config.machine, "sigma_z_sign": sign})
    policy = RotationPolicy.from_defaults()

    if config.ratios:
        reports = error_scaling_sweep(seq, machine.rabi_1, config.ratios, machine.n_max, policy,
                                      workers=len(config.ratios), sigma_z_sign=sign)
        print(f"{'Δ/Ω':>8} {'phase-robust':>14} {'strict':>12} {'leakage':>12}")
        for ratio, report in zip(config.ratios, reports):
            print(f"{ratio:>8g} {report.phase_robust_infidelity:>14.4e} "
                  f"{report.strict_infidelity:>12.4e} {report.leakage_out_of_subspace:>12.4e}")
        worst = max(r.phase_robust_infidelity for r in reports)
        payload = ValidationSweep(ratios=config.ratios, reports=reports)
    else:
        report = validate(seq, machine, machine.n_max, policy, config.coupling)
        print(f"phase-robust infidelity {report.phase_robust_infidelity:.4e}, "
              f"strict {report.strict_infidelity:.4e}, leakage {report.leakage_out_of_subspace:.4e}, "
              f"Ω/2Δ = {report.off_resonance_ratio:.3g}")
        worst = report.phase_robust_infidelity
        payload = report

    failed = config.max_infidelity is not None and worst > config.max_infidelity
    if failed:
        print(f"❌ infidelity {worst:.4e} above --max-infidelity {config.max_infidelity}")

    if config.schedule_csv:
        export_schedule_csv(compile_schedule(seq, machine, policy), config.schedule_csv)
    if config.output:
        write_report(payload, config.output)
    return EXIT_FAILURE if failed else EXIT_OK


def _estimate(config: RunConfig) -> int:
    from processor import ResourceParams, estimate_resources
    from sequence_io import write_report

    params = ResourceParams.from_defaults(**config.resources)
    estimate = estimate_resources(params)
    budget, modes = estimate.budget, estimate.modes

    rows = [
        ("entangler duration", f"{budget.entangler_duration * 1e9:.2f} ns"),
        ("gate duration", f"{budget.gate_duration * 1e6:.3f} µs"),
        ("ops per gate", f"{params.ops_per_gate}"),
        ("gates in coherence", f"{budget.gates_in_coherence}"),
        ("modes in band", f"{modes}"),
        ("cavity lifetime", f"{budget.cavity_lifetime * 1e6:.3f} µs"),
    ]
    print("=" * 40)
    for label, value in rows:
        print(f"{label:<22}{value:>18}")
    print("=" * 40)

    if config.output:
        write_report(estimate, config.output)
    return EXIT_OK


def _compile(config: RunConfig) -> int:
    from processor import ResourceParams, compile_circuit, parse_circuit
    from sequence_io import write_report

    if not config.circuit:
        raise UsageError("compile needs --circuit")
    if not config.circuit.is_file():
        raise UsageError(f"circuit file {config.circuit} not found")
    params = ResourceParams.from_defaults(**config.resources)
    cost = compile_circuit(parse_circuit(config.circuit.read_text()), params, config.mode_count)

    marker = "✅ feasible" if cost.feasible else "❌ infeasible"
    print(f"{cost.gate_count} gates → {cost.machine_ops} machine ops, "
          f"{cost.duration * 1e6:.3f} µs of {params.coherence_time * 1e6:.3f} µs: {marker}")
    if config.output:
        write_report(cost, config.output)
    return EXIT_OK if cost.feasible else EXIT_FAILURE


COMMANDS = {
    "verify": _verify,
    "synthesize": _synthesize,
    "validate": _validate,
    "estimate": _estimate,
    "compile": _compile,
}


def run(config: RunConfig) -> int:
    """Execute one command; errors map to exit code 2"""
    try:
        return COMMANDS[config.command](config.resolve_paths())
    except ValidationError as e:
        print(f"❌ invalid configuration: {e}")
    except CavityMachineError as e:
        print(f"❌ {e}")
    except OSError as e:
        print(f"❌ file error: {e}")
    return EXIT_USAGE


# ---- Argument parsing ----

def _parse_band(text: str) -> List[float]:
    try:
        low, high = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must be MIN:MAX in Hz, got '{text}'")
    return [low, high]


def _parse_ratios(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ratios must be comma separated numbers, got '{text}'")


def _add_resource_args(parser: argparse.ArgumentParser):
    parser.add_argument("--omega", type=float, help="vacuum Rabi frequency (rad/s)")
    parser.add_argument("--T", dest="coherence_time", type=float, help="coherence time (s)")
    parser.add_argument("--Q", dest="quality_factor", type=float, help="cavity quality factor")
    parser.add_argument("--band", type=_parse_band, help="mode band MIN:MAX (Hz)")
    parser.add_argument("--spacing", type=float, help="mode spacing (Hz)")
    parser.add_argument("--ops-per-gate", type=int)
    parser.add_argument("--overhead", type=float, help="rotation time relative to entangler time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli.py", description="Cavity + qubit Turing machine tools")
    parser.add_argument("--config", type=Path, help="JSON file merged under the command-line options")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="check a sequence against a target under every reading")
    verify.add_argument("--sequence")
    verify.add_argument("--target")
    verify.add_argument("--threshold", type=float)
    verify.add_argument("--output", type=Path)

    synth = sub.add_parser("synthesize", help="find a sequence for a target")
    synth.add_argument("--target")
    synth.add_argument("--M", dest="step_count", type=int)
    synth.add_argument("--pattern")
    synth.add_argument("--restarts", type=int)
    synth.add_argument("--max-iterations", type=int)
    synth.add_argument("--tolerance", type=float)
    synth.add_argument("--workers", type=int)
    synth.add_argument("--allow-short", dest="allow_short_sequences", action="store_true", default=None)
    synth.add_argument("--seed", type=int)
    synth.add_argument("--output", type=Path)
    synth.add_argument("--trace", type=Path)
    synth.add_argument("--report", type=Path)

    validate = sub.add_parser("validate", help="propagate the full Hamiltonian of a compiled sequence")
    validate.add_argument("--sequence")
    validate.add_argument("--omega", type=float)
    validate.add_argument("--half-detuning", type=float)
    validate.add_argument("--n-max", type=int)
    validate.add_argument("--ratios", type=_parse_ratios, help="Δ/Ω sweep, e.g. 10,50,250")
    validate.add_argument("--coupling", choices=["full", "resonant_only"])
    validate.add_argument("--max-infidelity", type=float)
    validate.add_argument("--schedule-csv", type=Path)
    validate.add_argument("--output", type=Path)

    estimate = sub.add_parser("estimate", help="gate and mode budget")
    _add_resource_args(estimate)
    estimate.add_argument("--output", type=Path)

    compile_ = sub.add_parser("compile", help="machine operation count of a circuit")
    compile_.add_argument("--circuit", type=Path)
    compile_.add_argument("--modes", dest="mode_count", type=int)
    _add_resource_args(compile_)
    compile_.add_argument("--output", type=Path)
    return parser


_OPTIMIZATION_KEYS = ("step_count", "pattern", "restarts", "max_iterations", "tolerance",
                      "workers", "allow_short_sequences")


def config_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Namespace → RunConfig dictionary, dropping options that were not given"""
    values = {k: v for k, v in vars(args).items() if v is not None}
    values.pop("config", None)
    values.pop("log_level", None)

    optimization = {k: values.pop(k) for k in _OPTIMIZATION_KEYS if k in values}
    machine = {}
    resources = {}
    if args.command == "validate":
        if "omega" in values:
            omega = values.pop("omega")
            machine.update(rabi_1=omega, rabi_2=omega)
        if "half_detuning" in values:
            machine["half_detuning"] = values.pop("half_detuning")
        if "n_max" in values:
            machine["n_max"] = values.pop("n_max")
    else:
        if "omega" in values:
            resources["rabi"] = values.pop("omega")
        if "band" in values:
            resources["band_min"], resources["band_max"] = values.pop("band")
        if "spacing" in values:
            resources["mode_spacing"] = values.pop("spacing")
        for key in ("coherence_time", "quality_factor", "ops_per_gate"):
            if key in values:
                resources[key] = values.pop(key)
        if "overhead" in values:
            resources["rotation_overhead"] = values.pop("overhead")

    for section, content in (("machine", machine), ("optimization", optimization), ("resources", resources)):
        if content:
            values[section] = content
    return values


def load_config_file(path: Path) -> Dict[str, Any]:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found")
    except json.JSONDecodeError as e:
        raise SequenceFormatError(f"malformed config JSON: {e.msg}", e.lineno, e.colno)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    logging.basicConfig(
        level=(args.log_level or run_config_store.get_log_level()).upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        values = config_from_args(args)
        if args.config:
            values = merge_config(load_config_file(args.config), values)
        config = RunConfig(**values)
    except ValidationError as e:
        print(f"❌ invalid configuration: {e}")
        return EXIT_USAGE
    except CavityMachineError as e:
        print(f"❌ {e}")
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
