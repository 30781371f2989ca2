import math

import numpy as np
import pytest

from errors import ConfigurationError, UsageError
from fock_core import check_unitary, identity
from machine_config import MachineConfig
from machine_model import (
    ENTANGLER_ANGLE,
    SUBSPACE_DIM,
    Axis,
    Entangler,
    entangler,
    entangler_block,
    free_phase,
    jaynes_cummings_evolution,
    machine_model,
    qubit_operators,
    qubit_rotation,
    restrict,
    rotation_block,
    subspace_basis,
    subspace_projector,
)


def test_subspace_basis_order():
    assert subspace_basis.labels[0] == (1, 1, 1)
    assert subspace_basis.labels[7] == (0, 0, 0)
    assert subspace_basis.index_of[(1, 0, 0)] == 3
    assert subspace_basis.label_text(6) == "|001⟩"


def test_pauli_conventions():
    ops = qubit_operators()
    assert np.allclose(ops["x"] @ ops["x"], identity(2))
    assert np.allclose(ops["y"] @ ops["y"], identity(2))
    assert np.allclose(ops["z"], np.diag([1, -1]))
    assert np.allclose(qubit_operators(-1)["z"], np.diag([-1, 1]))
    # σy = iσ⁻ − iσ⁺ with σz = +1 on |g⟩ gives σxσy = −iσz
    assert np.allclose(ops["x"] @ ops["y"], -1j * ops["z"])


@pytest.mark.parametrize("mode", [1, 2])
def test_entanglers_keep_the_subspace(mode):
    block, leakage = restrict(entangler(mode, 3))
    assert leakage < 1e-10
    assert check_unitary(block).passed


@pytest.mark.parametrize("draw", range(50))
def test_rotations_and_free_phase_keep_the_subspace(draw):
    rng = np.random.default_rng(draw)
    sigma, phase = rng.uniform(-2 * math.pi, 2 * math.pi, size=2)
    for axis in Axis:
        block, leakage = restrict(qubit_rotation(axis, sigma, 3))
        assert leakage < 1e-10
        assert check_unitary(block, 1e-9).passed
        assert np.allclose(block, rotation_block(axis, sigma))

    phase_block, phase_leakage = restrict(free_phase(phase, 3))
    assert phase_leakage < 1e-10
    assert check_unitary(phase_block, 1e-9).passed


@pytest.mark.parametrize("axis", list(Axis))
def test_rotation_period(axis):
    # exp(−iσ·σ_axis): a shift by π flips the sign, a shift by 2π is the identity
    sigma = 0.83
    rotation = qubit_rotation(axis, sigma, 2)
    assert np.max(np.abs(qubit_rotation(axis, sigma + math.pi, 2) + rotation)) < 1e-12
    assert np.max(np.abs(qubit_rotation(axis, sigma + 2 * math.pi, 2) - rotation)) < 1e-12


def test_repeated_entangler_is_not_the_identity():
    block, _ = restrict(entangler(1, 3) @ entangler(1, 3))
    assert abs(np.trace(block)) / SUBSPACE_DIM < 0.99


@pytest.mark.parametrize("phase", [0.3, 1.7, -2.9, 2 * math.pi])
def test_free_phase_commutes_with_the_projector(phase):
    projector = subspace_projector(3)
    onto = projector.conj().T @ projector
    u = free_phase(phase, 3)
    assert np.max(np.abs(u @ onto - onto @ u)) < 1e-12


def test_entangler_angle_error_leaks():
    _, leakage = restrict(jaynes_cummings_evolution(1, 1.1 * ENTANGLER_ANGLE, 3))
    assert leakage > 0.1


def test_entangler_block_entries():
    block = entangler_block(Entangler.A)
    c = math.cos(ENTANGLER_ANGLE)
    # |e,0⟩ ↔ |g,1⟩ doublet of mode 1 with n₂ = 0
    e0, g1 = subspace_basis.index_of[(1, 0, 0)], subspace_basis.index_of[(0, 0, 1)]
    assert abs(block[e0, e0] - c) < 1e-12
    assert abs(block[g1, g1] - c) < 1e-12
    assert abs(abs(block[e0, g1]) - abs(math.sin(ENTANGLER_ANGLE))) < 1e-12
    # |e,1⟩ is trapped and |g,0⟩ is dark
    e1 = subspace_basis.index_of[(1, 0, 1)]
    g0 = subspace_basis.index_of[(0, 0, 0)]
    assert abs(block[e1, e1] - 1.0) < 1e-10
    assert abs(block[g0, g0] - 1.0) < 1e-12
    assert abs(c + 0.26625) < 1e-4


def test_entangler_b_acts_on_mode_two():
    block = entangler_block(Entangler.B)
    e0 = subspace_basis.index_of[(1, 0, 0)]
    g_mode2 = subspace_basis.index_of[(0, 1, 0)]
    assert abs(abs(block[e0, g_mode2]) - abs(math.sin(ENTANGLER_ANGLE))) < 1e-12


def test_entangler_needs_the_trapping_level():
    with pytest.raises(ConfigurationError):
        entangler(1, 1)


def test_entangler_accepts_machine_config():
    config = MachineConfig(rabi_1=1.0, rabi_2=1.0, half_detuning=50.0, n_max=2)
    assert entangler(1, config).shape == (18, 18)


def test_restrict_rejects_wrong_dimension():
    with pytest.raises(UsageError):
        restrict(identity(10))
    with pytest.raises(UsageError):
        restrict(identity(32), 2)


def test_coupling_generator_rejects_unknown_mode():
    with pytest.raises(UsageError):
        machine_model(2).coupling_generator(3)


def test_free_phase_is_diagonal_in_photon_difference():
    block, _ = restrict(free_phase(0.5, 2))
    index = subspace_basis.index_of[(0, 0, 1)]
    assert abs(block[index, index] - np.exp(-0.5j)) < 1e-12
    index = subspace_basis.index_of[(0, 1, 0)]
    assert abs(block[index, index] - np.exp(0.5j)) < 1e-12
    assert block.shape == (SUBSPACE_DIM, SUBSPACE_DIM)
