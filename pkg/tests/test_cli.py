import json

import pytest

from cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main


def test_verify_default_sequence_reports_the_discrepancy(tmp_path, capsys):
    out = tmp_path / "verify.json"
    assert main(["verify", "--output", str(out)]) == EXIT_FAILURE
    report = json.loads(out.read_text())
    assert report["target"] == "cnot"
    assert report["best_reading"] == "printed-last/-1"
    assert not report["reproduced"]
    assert "discrepancy" in capsys.readouterr().out


def test_verify_swap_defaults_to_the_printed_swap(tmp_path):
    out = tmp_path / "verify.json"
    main(["verify", "--sequence", "swap72", "--output", str(out)])
    assert json.loads(out.read_text())["target"] == "swap-printed"


def test_malformed_sequence_is_a_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "name": "x",\n  "pattern": [\n')
    out = tmp_path / "report.json"
    assert main(["verify", "--sequence", str(bad), "--output", str(out)]) == EXIT_USAGE
    assert "line" in capsys.readouterr().out
    assert not out.exists()


def test_unknown_config_key_is_rejected(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"bogus": 1}))
    assert main(["--config", str(config), "estimate"]) == EXIT_USAGE


def test_config_file_values_are_used(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"resources": {"rotation_overhead": 0.0}}))
    assert main(["--config", str(config), "estimate"]) == EXIT_OK
    assert "31" in capsys.readouterr().out


def test_estimate_prints_the_budget(tmp_path, capsys):
    out = tmp_path / "estimate.json"
    assert main(["estimate", "--output", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "gates in coherence" in printed
    assert "15" in printed
    estimate = json.loads(out.read_text())
    assert estimate["modes"] == 10
    assert estimate["budget"]["gates_in_coherence"] == 15


def test_estimate_accepts_a_band(capsys):
    assert main(["estimate", "--band", "5e9:8e9"]) == EXIT_OK
    assert main(["estimate", "--band", "8e9"]) == EXIT_USAGE


def test_compile_example_circuit(tmp_path):
    from pathlib import Path
    circuit = Path(__file__).resolve().parent.parent / "data" / "example_circuit.txt"
    out = tmp_path / "cost.json"
    assert main(["compile", "--circuit", str(circuit), "--modes", "3", "--output", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["machine_ops"] == 2 * 72 + 2 * 145


def test_compile_needs_a_circuit():
    assert main(["compile"]) == EXIT_USAGE


def test_unknown_target_is_a_usage_error():
    assert main(["synthesize", "--target", "toffoli"]) == EXIT_USAGE


def test_short_synthesis_needs_opt_in():
    assert main(["synthesize", "--target", "identity", "--M", "30"]) == EXIT_USAGE


def test_synthesis_output_is_reproducible(tmp_path):
    args = ["synthesize", "--target", "identity", "--restarts", "2", "--max-iterations", "150",
            "--tolerance", "1e-6", "--seed", "3"]
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    code_a = main(args + ["--output", str(first), "--trace", str(tmp_path / "trace.txt")])
    code_b = main(args + ["--output", str(second)])
    assert code_a == code_b
    assert first.read_bytes() == second.read_bytes()
    assert (tmp_path / "trace.txt").read_text().strip()


@pytest.mark.parametrize("flag", ["--output", "--trace", "--report"])
def test_missing_output_directory_is_a_usage_error(tmp_path, flag):
    sequence_out = tmp_path / "synth.json"
    args = ["synthesize", "--target", "identity", "--restarts", "1", "--max-iterations", "5",
            "--output", str(sequence_out)]
    args += [flag, str(tmp_path / "missing_dir" / "out.txt")]
    assert main(args) == EXIT_USAGE
    assert not (tmp_path / "missing_dir").exists()
    if flag != "--output":
        assert not sequence_out.exists()


def test_unwritable_output_is_a_usage_error(tmp_path, capsys):
    assert main(["estimate", "--output", str(tmp_path)]) == EXIT_USAGE
    assert "file error" in capsys.readouterr().out


def test_validate_needs_the_trapping_level():
    assert main(["validate", "--sequence", "cnot72", "--n-max", "1"]) == EXIT_USAGE


def test_validate_writes_schedule_and_checks_the_bound(tmp_path):
    sequence = tmp_path / "short.json"
    sequence.write_text(json.dumps({
        "name": "short",
        "pattern": [{"entangler": "A", "axis": "x"}, {"entangler": "B", "axis": "y"}],
        "sigmas": [0.4, -0.3, 0.2, 0.1],
    }))
    csv_path = tmp_path / "schedule.csv"
    code = main(["validate", "--sequence", str(sequence), "--omega", "1.0", "--half-detuning", "500",
                 "--schedule-csv", str(csv_path), "--max-infidelity", "0.01"])
    assert code == EXIT_OK
    assert len(csv_path.read_text().splitlines()) == 1 + 8

    code = main(["validate", "--sequence", str(sequence), "--omega", "1.0", "--half-detuning", "5",
                 "--max-infidelity", "1e-9"])
    assert code == EXIT_FAILURE


def test_missing_subcommand_is_a_usage_error():
    assert main([]) == EXIT_USAGE


@pytest.mark.parametrize("flag", ["--help"])
def test_help_exits_cleanly(flag):
    assert main([flag]) == EXIT_OK
