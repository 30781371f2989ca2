import numpy as np
import pytest

from errors import ContractViolation, UsageError
from fock_core import check_unitary, identity
from machine_model import Axis, Entangler, entangler_block, restrict
from sequence_engine import (
    ALL_READINGS,
    PUBLISHED_CNOT_SIGMAS,
    PUBLISHED_SWAP_SIGMAS,
    ControlSequence,
    GateTarget,
    Reading,
    SigmaOrder,
    apply_reading,
    canonical_cnot_sequence,
    canonical_swap_sequence,
    evaluate,
    evaluate_full,
    gate_fidelity,
    get_target,
    normalize_pattern,
    photonic_factor,
    verify,
)

# fidelity of each published list under every reading, measured once
CNOT_FIDELITIES = {
    "printed-first/+1": 0.054778,
    "printed-first/-1": 0.103367,
    "printed-last/+1": 0.065617,
    "printed-last/-1": 0.151098,
}
SWAP_FIDELITIES = {
    "printed-first/+1": 0.113678,
    "printed-first/-1": 0.078413,
    "printed-last/+1": 0.112620,
    "printed-last/-1": 0.146433,
}


def test_published_lists():
    assert len(PUBLISHED_CNOT_SIGMAS) == 72
    assert len(PUBLISHED_SWAP_SIGMAS) == 72
    assert PUBLISHED_CNOT_SIGMAS[0] == -0.2872
    assert PUBLISHED_CNOT_SIGMAS[-1] == -2.8158
    assert [i for i, v in enumerate(PUBLISHED_SWAP_SIGMAS) if v == 0.0] == [19, 23, 66]
    assert PUBLISHED_SWAP_SIGMAS[9] == 0.077


def test_canonical_pattern_repeats():
    seq = canonical_cnot_sequence()
    assert seq.name == "cnot72"
    assert seq.steps[0].entangler is Entangler.A and seq.steps[0].axis is Axis.X
    assert seq.steps[1].entangler is Entangler.B and seq.steps[1].axis is Axis.Y
    assert seq.steps[71].entangler is Entangler.A and seq.steps[71].axis is Axis.Z


def test_normalize_pattern_accepts_dicts_and_rejects_junk():
    entries = normalize_pattern([{"entangler": "B", "axis": "z"}, ("A", "y")])
    assert entries == ((Entangler.B, Axis.Z), (Entangler.A, Axis.Y))
    with pytest.raises(UsageError):
        normalize_pattern([("C", "x")])
    with pytest.raises(UsageError):
        normalize_pattern([])


def test_empty_sequence_is_identity():
    assert np.allclose(evaluate(ControlSequence(steps=())), identity(8))


def test_evaluation_is_unitary():
    assert check_unitary(evaluate(canonical_swap_sequence())).passed


def test_concatenation_multiplies():
    sigmas = PUBLISHED_CNOT_SIGMAS
    first = ControlSequence.from_sigmas(sigmas[:9])
    second = ControlSequence.from_sigmas(sigmas[9:15], [("B", "y"), ("A", "z"), ("A", "x")])
    assert np.allclose(evaluate(first.concat(second)), evaluate(second) @ evaluate(first))


def test_block_product_matches_full_space():
    seq = ControlSequence.from_sigmas(PUBLISHED_CNOT_SIGMAS[:6])
    block, leakage = restrict(evaluate_full(seq, 3))
    assert leakage < 1e-9
    assert np.allclose(block, evaluate(seq), atol=1e-10)


def test_printed_last_reverses_values_only():
    seq = canonical_swap_sequence()
    read = apply_reading(seq, Reading(SigmaOrder.PRINTED_LAST, 1))
    assert read.sigmas == list(reversed(seq.sigmas))
    assert read.pattern == seq.pattern
    assert apply_reading(seq, Reading()) is seq
    assert [r.label for r in ALL_READINGS] == list(CNOT_FIDELITIES)


def test_fidelity_properties(rng):
    cnot = get_target("cnot").matrix
    assert gate_fidelity(identity(8), cnot) == pytest.approx(0.5)
    assert gate_fidelity(cnot, cnot) == pytest.approx(1.0)
    assert gate_fidelity(np.exp(0.7j) * cnot, cnot) == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        gate_fidelity(2 * identity(8), cnot)


def test_targets_are_unitary_permutations():
    for name in ("cnot", "swap-printed", "swap-qubit-mode1", "identity"):
        matrix = get_target(name).matrix
        assert check_unitary(matrix).passed
        assert set(np.unique(matrix.real)) <= {0.0, 1.0}
    with pytest.raises(UsageError):
        get_target("toffoli")
    with pytest.raises(UsageError):
        GateTarget("bad", np.ones((8, 8)))


@pytest.mark.parametrize(
    "seq, target, expected",
    [
        (canonical_cnot_sequence(), "cnot", CNOT_FIDELITIES),
        (canonical_swap_sequence(), "swap-printed", SWAP_FIDELITIES),
    ],
)
def test_published_sequences_do_not_reproduce_their_targets(seq, target, expected):
    report = verify(seq, target)
    assert report.step_count == 72
    for label, fidelity in expected.items():
        assert report.fidelity_per_reading[label] == pytest.approx(fidelity, abs=2e-3)
    assert report.best_reading == "printed-last/-1"
    assert not report.reproduced
    assert "no reading reaches" in report.discrepancy
    assert check_unitary(report.produced_unitary.to_matrix(), 1e-8).passed


def test_verify_reports_reachability_of_the_target():
    assert verify(canonical_cnot_sequence(), "cnot").target_reachability_residual > 0.5
    assert verify(canonical_swap_sequence(), "swap-printed").target_reachability_residual < 1e-12


def test_verify_accepts_a_sequence_for_its_own_product():
    seq = ControlSequence.from_sigmas(PUBLISHED_SWAP_SIGMAS[:12])
    report = verify(seq, GateTarget("own", evaluate(seq)))
    assert report.reproduced
    assert report.best_reading == "printed-first/+1"
    assert report.discrepancy is None


def test_photonic_factor():
    cnot = get_target("cnot").matrix
    factor = photonic_factor(cnot)
    assert factor is not None
    assert factor.residual < 1e-12
    assert np.allclose(np.kron(identity(2), factor.matrix), cnot)

    assert photonic_factor(entangler_block(Entangler.A)) is None
    with pytest.raises(ContractViolation):
        photonic_factor(np.ones((8, 8)))
