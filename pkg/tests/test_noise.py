"""Depolarizing channel, fidelity closed forms, security threshold."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridqkd.noise import (
    NoiseConfig,
    NoiseScope,
    SecurityParams,
    b92_fidelity,
    combined_fidelity,
    depolarize,
    entropy_bound,
    ghz_fidelity,
    sample_depolarized,
    security_condition,
)
from hybridqkd.quantum import (
    PauliBasis,
    density_from_state,
    fidelity_pure,
    make_ghz,
    measure_pauli,
    plus_state,
    zero_state,
)

P_GRID = [round(0.05 * k, 2) for k in range(21)]


# -- configuration objects ---------------------------------------------------


def test_noise_config_defaults_and_validation():
    config = NoiseConfig()
    assert config.p == 0.0
    assert config.apply_to is NoiseScope.QUANTUM_CHANNEL_ONLY
    with pytest.raises(ValueError):
        NoiseConfig(p=1.5)
    with pytest.raises(ValueError):
        NoiseConfig(p=-0.1)


def test_security_params_validation():
    params = SecurityParams()
    assert (params.s, params.n) == (20, 128)
    with pytest.raises(ValueError):
        SecurityParams(s=0)
    with pytest.raises(ValueError):
        SecurityParams(n=0)
    with pytest.raises(ValueError):
        SecurityParams(s=1.5)  # type: ignore[arg-type]


# -- the channel on density matrices ----------------------------------------


def test_depolarize_identity_at_zero():
    rho = density_from_state(make_ghz())
    out = depolarize(rho, 0.0)
    assert np.allclose(out.entries, rho.entries, atol=1e-15)


def test_depolarize_fully_mixes_at_one():
    rho = density_from_state(make_ghz())
    out = depolarize(rho, 1.0)
    assert np.allclose(out.entries, np.eye(8) / 8, atol=1e-15)


def test_depolarize_ghz_matrix_entries():
    rho = depolarize(density_from_state(make_ghz()), 0.2)
    # corners: (1 - p)/2 + p/8 = 0.425; coherence: (1 - p)/2 = 0.4
    assert rho.entries[0, 0].real == pytest.approx(0.425, abs=1e-12)
    assert rho.entries[7, 7].real == pytest.approx(0.425, abs=1e-12)
    assert rho.entries[0, 7].real == pytest.approx(0.4, abs=1e-12)
    assert rho.entries[1, 1].real == pytest.approx(0.025, abs=1e-12)
    assert np.isclose(np.trace(rho.entries).real, 1.0, atol=1e-12)


def test_depolarize_rejects_bad_probability():
    rho = density_from_state(zero_state(1))
    with pytest.raises(ValueError):
        depolarize(rho, 1.2)


# -- closed-form fidelities vs the density-matrix route ----------------------


def test_ghz_fidelity_closed_form_matches_numeric():
    ghz = make_ghz()
    rho = density_from_state(ghz)
    for p in P_GRID:
        numeric = fidelity_pure(ghz, depolarize(rho, p))
        assert abs(ghz_fidelity(p) - numeric) < 1e-12


def test_b92_fidelity_closed_form_matches_numeric():
    for signal in (zero_state(1), plus_state()):
        rho = density_from_state(signal)
        for p in P_GRID:
            numeric = fidelity_pure(signal, depolarize(rho, p))
            assert abs(b92_fidelity(p) - numeric) < 1e-12


def test_combined_fidelity_is_the_minimum():
    for p in P_GRID:
        assert combined_fidelity(p) == min(ghz_fidelity(p), b92_fidelity(p))
    # the three-qubit branch loses more weight to the mixed state, so it
    # is the binding branch at every positive noise level
    for p in P_GRID:
        if p > 0:
            assert combined_fidelity(p) == ghz_fidelity(p) < b92_fidelity(p)


def test_fidelity_edge_values():
    assert ghz_fidelity(0.0) == 1.0
    assert b92_fidelity(0.0) == 1.0
    assert ghz_fidelity(0.5) == 0.75  # sqrt(0.5625) is exact in floats
    assert ghz_fidelity(1.0) == pytest.approx(math.sqrt(1 / 8), abs=1e-15)
    assert b92_fidelity(1.0) == pytest.approx(math.sqrt(1 / 2), abs=1e-15)


def test_fidelity_rejects_bad_probability():
    with pytest.raises(ValueError):
        ghz_fidelity(-0.01)
    with pytest.raises(ValueError):
        b92_fidelity(1.01)


# -- security condition and entropy bound ------------------------------------


def test_security_condition_clear_cases():
    assert security_condition(1.0, SecurityParams(s=10, n=1))
    assert not security_condition(0.9, SecurityParams(s=10, n=1))


def test_security_condition_boundary_is_strict():
    # At s = 2 the threshold is F^2 > 0.75.  sqrt(0.75) squares to
    # 0.7499999999999999 in floats, one ulp short of threshold: abort.
    params = SecurityParams(s=2, n=1)
    boundary = math.sqrt(0.75)
    assert boundary * boundary == 0.7499999999999999
    assert not security_condition(boundary, params)
    # one ulp up squares to 0.7500000000000001: continue
    above = float(np.nextafter(boundary, 1.0))
    assert above * above == 0.7500000000000001
    assert security_condition(above, params)


def test_default_security_rejects_any_practical_noise():
    # At s = 20 the fidelity condition tolerates only F^2 > 1 - 2^-20,
    # which the three-qubit branch already violates at p around 1e-6.
    params = SecurityParams()
    assert security_condition(combined_fidelity(0.0), params)
    assert not security_condition(combined_fidelity(1e-5), params)


def test_entropy_bound_frozen_values():
    assert entropy_bound(SecurityParams(s=20, n=128)) == pytest.approx(
        0.00026458997253502747, abs=1e-18
    )
    assert entropy_bound(SecurityParams(s=1, n=1)) == pytest.approx(
        2.221347520444482, abs=1e-12
    )


@settings(max_examples=40, deadline=None)
@given(s=st.integers(1, 40), n=st.integers(1, 4096))
def test_entropy_bound_shrinks_with_s(s, n):
    assert entropy_bound(SecurityParams(s=s + 1, n=n)) < entropy_bound(
        SecurityParams(s=s, n=n)
    )


# -- trajectory sampling ------------------------------------------------------


def test_sample_depolarized_noop_at_zero():
    state = make_ghz()
    rng = np.random.default_rng(1)
    assert sample_depolarized(state, NoiseConfig(p=0.0), rng) is state


def test_sample_depolarized_is_deterministic_per_seed():
    noise = NoiseConfig(p=0.7)
    a = sample_depolarized(make_ghz(), noise, np.random.default_rng(5))
    b = sample_depolarized(make_ghz(), noise, np.random.default_rng(5))
    assert np.array_equal(a.amplitudes, b.amplitudes)


def test_channel_scope_replacement_statistics():
    # |0> through the global channel at p = 0.3: the state is replaced by
    # a uniform basis state with probability p, so P(Z outcome -1) is
    # p/2 = 0.15.  4 sigma at n = 4000 is 0.023.
    noise = NoiseConfig(p=0.3, apply_to=NoiseScope.QUANTUM_CHANNEL_ONLY)
    rng = np.random.default_rng(123)
    hits = 0
    for _ in range(4000):
        state = sample_depolarized(zero_state(1), noise, rng)
        outcome, _ = measure_pauli(state, 0, PauliBasis.Z, rng)
        hits += outcome == -1
    assert abs(hits / 4000 - 0.15) < 0.025


def test_per_qubit_scope_pauli_statistics():
    # |0> through the per-qubit channel at p = 1: a uniform Pauli acts,
    # flipping to |1> for X or Y, so P(Z outcome -1) is 1/2.
    noise = NoiseConfig(p=1.0, apply_to=NoiseScope.ALL_QUBITS)
    rng = np.random.default_rng(321)
    hits = 0
    for _ in range(4000):
        state = sample_depolarized(zero_state(1), noise, rng)
        outcome, _ = measure_pauli(state, 0, PauliBasis.Z, rng)
        hits += outcome == -1
    assert abs(hits / 4000 - 0.5) < 0.032


def test_channel_scope_at_one_yields_basis_state():
    noise = NoiseConfig(p=1.0, apply_to=NoiseScope.QUANTUM_CHANNEL_ONLY)
    rng = np.random.default_rng(9)
    for _ in range(20):
        state = sample_depolarized(make_ghz(), noise, rng)
        weights = state.probabilities()
        assert np.isclose(weights.max(), 1.0, atol=1e-12)
