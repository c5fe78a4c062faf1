"""Statevector core: gates, measurement, reductions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridqkd.quantum import (
    CNOT,
    GATES,
    HADAMARD,
    PAULI_X_GATE,
    S_DAGGER,
    DensityMatrix,
    Gate,
    GateName,
    PauliBasis,
    StateVector,
    apply_gate,
    apply_pauli,
    basis_state,
    density_from_state,
    expectation_pauli_product,
    fidelity_pure,
    make_ghz,
    measure_pauli,
    partial_trace,
    plus_state,
    von_neumann_entropy,
    zero_state,
)

INV_SQRT2 = 1.0 / math.sqrt(2.0)


def random_state(num_qubits: int, seed: int) -> StateVector:
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(num_qubits, amps / np.linalg.norm(amps))


# -- construction and validation --------------------------------------------


def test_zero_and_basis_states():
    assert np.array_equal(zero_state(2).amplitudes, [1, 0, 0, 0])
    assert np.array_equal(basis_state(3, 5).amplitudes, np.eye(8)[5])
    assert plus_state().amplitudes == pytest.approx([INV_SQRT2, INV_SQRT2])


def test_ghz_amplitudes():
    ghz = make_ghz()
    assert ghz.num_qubits == 3
    expected = np.zeros(8)
    expected[0] = expected[7] = INV_SQRT2
    assert np.allclose(ghz.amplitudes, expected)


def test_state_rejects_unnormalized():
    with pytest.raises(ValueError):
        StateVector(1, [1.0, 1.0])


def test_state_rejects_wrong_length():
    with pytest.raises(ValueError):
        StateVector(2, [1.0, 0.0, 0.0])


def test_state_rejects_too_many_qubits():
    amps = np.zeros(2**6)
    amps[0] = 1.0
    with pytest.raises(ValueError):
        StateVector(6, amps)


def test_amplitudes_are_frozen():
    state = zero_state(1)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 0.5


def test_basis_state_rejects_bad_index():
    with pytest.raises(ValueError):
        basis_state(2, 4)


def test_gate_rejects_non_unitary():
    with pytest.raises(ValueError):
        Gate(GateName.H, np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_gate_table_contents():
    assert set(GATES) == set(GateName)
    assert GATES[GateName.H] is HADAMARD
    assert GATES[GateName.S_DAGGER] is S_DAGGER
    assert GATES[GateName.CNOT].num_qubits == 2


# -- gate application --------------------------------------------------------


def test_hadamard_makes_plus():
    out = apply_gate(zero_state(1), HADAMARD, [0])
    assert out.amplitudes == pytest.approx(plus_state().amplitudes)


def test_hadamard_is_involutive():
    state = random_state(2, seed=11)
    back = apply_gate(apply_gate(state, HADAMARD, [1]), HADAMARD, [1])
    assert np.allclose(back.amplitudes, state.amplitudes, atol=1e-12)


def test_cnot_flips_target_when_control_set():
    # control qubit 0 is set in |001>, so the target qubit 1 flips: |011>
    out = apply_gate(basis_state(3, 0b001), CNOT, [0, 1])
    assert np.argmax(np.abs(out.amplitudes)) == 0b011
    # control clear: nothing happens
    out = apply_gate(basis_state(3, 0b100), CNOT, [0, 1])
    assert np.argmax(np.abs(out.amplitudes)) == 0b100


def test_circuit_builds_ghz():
    state = zero_state(3)
    state = apply_gate(state, HADAMARD, [0])
    state = apply_gate(state, CNOT, [0, 1])
    state = apply_gate(state, CNOT, [1, 2])
    assert np.allclose(state.amplitudes, make_ghz().amplitudes, atol=1e-15)


def test_apply_pauli_x():
    out = apply_pauli(zero_state(1), 0, PauliBasis.X)
    assert np.argmax(np.abs(out.amplitudes)) == 1


def test_apply_gate_rejects_bad_targets():
    with pytest.raises(ValueError):
        apply_gate(zero_state(2), CNOT, [0, 0])
    with pytest.raises(ValueError):
        apply_gate(zero_state(2), HADAMARD, [2])
    with pytest.raises(ValueError):
        apply_gate(zero_state(2), CNOT, [0])


# -- measurement -------------------------------------------------------------


def test_measure_z_on_basis_state_is_deterministic():
    rng = np.random.default_rng(0)
    outcome, post = measure_pauli(zero_state(1), 0, PauliBasis.Z, rng)
    assert outcome == +1
    assert np.allclose(post.amplitudes, zero_state(1).amplitudes)
    outcome, _ = measure_pauli(basis_state(1, 1), 0, PauliBasis.Z, rng)
    assert outcome == -1


def test_measure_x_on_plus_is_deterministic():
    rng = np.random.default_rng(0)
    for _ in range(20):
        outcome, post = measure_pauli(plus_state(), 0, PauliBasis.X, rng)
        assert outcome == +1
        assert np.allclose(post.amplitudes, plus_state().amplitudes, atol=1e-12)


def test_measure_collapses_ghz_in_z():
    for seed in range(12):
        rng = np.random.default_rng(seed)
        outcome, post = measure_pauli(make_ghz(), 0, PauliBasis.Z, rng)
        target = basis_state(3, 0 if outcome == +1 else 7)
        assert np.allclose(np.abs(post.amplitudes), target.amplitudes, atol=1e-12)


def test_measure_z_statistics_on_ghz():
    rng = np.random.default_rng(7)
    plus = sum(
        measure_pauli(make_ghz(), 0, PauliBasis.Z, rng)[0] == +1 for _ in range(4000)
    )
    # p = 1/2, 4 sigma band at n = 4000 is 0.032
    assert abs(plus / 4000 - 0.5) < 0.032


def test_measure_rejects_bad_qubit():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        measure_pauli(make_ghz(), 3, PauliBasis.Z, rng)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    num_qubits=st.integers(1, 3),
    data=st.data(),
)
def test_measurement_is_idempotent(seed, num_qubits, data):
    qubit = data.draw(st.integers(0, num_qubits - 1))
    basis = data.draw(st.sampled_from(list(PauliBasis)))
    state = random_state(num_qubits, seed)
    rng = np.random.default_rng(seed)
    first, post = measure_pauli(state, qubit, basis, rng)
    assert np.isclose(np.linalg.norm(post.amplitudes), 1.0, atol=1e-9)
    second, post2 = measure_pauli(post, qubit, basis, rng)
    assert second == first
    assert np.allclose(post2.amplitudes, post.amplitudes, atol=1e-9)


# -- expectation values ------------------------------------------------------


def test_ghz_stabilizer_expectations_are_exact():
    ghz = make_ghz()
    x, y = PauliBasis.X, PauliBasis.Y
    assert expectation_pauli_product(ghz, (x, x, x)) == 1.0
    for bases in ((x, y, y), (y, x, y), (y, y, x)):
        assert expectation_pauli_product(ghz, bases) == -1.0


def test_ghz_all_y_expectation_is_zero():
    # The three-fold Y product anticommutes with the three-fold X product
    # that stabilizes this state, so its mean is identically zero.
    ghz = make_ghz()
    y = PauliBasis.Y
    assert expectation_pauli_product(ghz, (y, y, y)) == 0.0


def test_single_qubit_expectations():
    assert expectation_pauli_product(plus_state(), (PauliBasis.X,)) == 1.0
    assert expectation_pauli_product(zero_state(1), (PauliBasis.Z,)) == 1.0
    assert abs(expectation_pauli_product(zero_state(1), (PauliBasis.X,))) < 1e-12


def test_expectation_rejects_wrong_arity():
    with pytest.raises(ValueError):
        expectation_pauli_product(make_ghz(), (PauliBasis.X,))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), data=st.data())
def test_expectation_is_bounded(seed, data):
    state = random_state(2, seed)
    bases = tuple(
        data.draw(st.sampled_from(list(PauliBasis)), label=f"b{q}") for q in range(2)
    )
    value = expectation_pauli_product(state, bases)
    assert -1.0 - 1e-9 <= value <= 1.0 + 1e-9


# -- density matrices and reductions ----------------------------------------


def test_density_from_state_is_projector():
    rho = density_from_state(make_ghz())
    assert rho.entries.shape == (8, 8)
    assert np.isclose(np.trace(rho.entries).real, 1.0, atol=1e-12)
    assert np.allclose(rho.entries @ rho.entries, rho.entries, atol=1e-12)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(1, np.array([[1.0, 1.0], [0.0, 0.0]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(1, np.eye(2))  # trace 2
    bad = np.array([[1.5, 0.0], [0.0, -0.5]])
    with pytest.raises(ValueError):
        DensityMatrix(1, bad)  # negative eigenvalue


def test_partial_trace_of_ghz_single_qubit():
    rho = density_from_state(make_ghz())
    for keep in ([0], [1], [2]):
        reduced = partial_trace(rho, keep)
        assert np.allclose(reduced.entries, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_of_ghz_two_qubits():
    rho = density_from_state(make_ghz())
    reduced = partial_trace(rho, [0, 2])
    assert np.allclose(reduced.entries, np.diag([0.5, 0, 0, 0.5]), atol=1e-12)


def test_partial_trace_relabels_kept_qubits():
    # |100>: qubit 2 is set.  Keeping [0, 2] maps old qubit 2 to new qubit 1,
    # so the reduced state is |10> = index 2.
    rho = density_from_state(basis_state(3, 0b100))
    reduced = partial_trace(rho, [0, 2])
    assert np.allclose(reduced.entries, np.diag([0, 0, 1.0, 0]), atol=1e-12)
    single = partial_trace(rho, [2])
    assert np.allclose(single.entries, np.diag([0, 1.0]), atol=1e-12)


def test_partial_trace_rejects_bad_keep():
    rho = density_from_state(make_ghz())
    with pytest.raises(ValueError):
        partial_trace(rho, [])
    with pytest.raises(ValueError):
        partial_trace(rho, [0, 1, 2])
    with pytest.raises(ValueError):
        partial_trace(rho, [3])


def test_entropy_of_pure_and_maximally_mixed():
    assert von_neumann_entropy(density_from_state(zero_state(2))) == pytest.approx(
        0.0, abs=1e-12
    )
    mixed = DensityMatrix(1, np.eye(2) / 2)
    assert von_neumann_entropy(mixed) == pytest.approx(1.0, abs=1e-12)
    mixed3 = DensityMatrix(3, np.eye(8) / 8)
    assert von_neumann_entropy(mixed3) == pytest.approx(3.0, abs=1e-12)


def test_ghz_marginal_entropy_is_one_bit():
    rho = density_from_state(make_ghz())
    for keep in ([0], [1], [2], [0, 1], [0, 2], [1, 2]):
        assert von_neumann_entropy(partial_trace(rho, keep)) == pytest.approx(
            1.0, abs=1e-12
        )


# -- fidelity ----------------------------------------------------------------


def test_fidelity_of_state_with_itself():
    ghz = make_ghz()
    assert fidelity_pure(ghz, density_from_state(ghz)) == pytest.approx(
        1.0, abs=1e-12
    )


def test_fidelity_of_orthogonal_states():
    rho = density_from_state(basis_state(1, 1))
    assert fidelity_pure(zero_state(1), rho) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity_pure(zero_state(1), density_from_state(make_ghz()))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_fidelity_is_bounded(seed):
    state = random_state(2, seed)
    other = random_state(2, seed + 1)
    value = fidelity_pure(state, density_from_state(other))
    assert 0.0 <= value <= 1.0 + 1e-12
