"""Intercept-resend attacks, cross-checked against exhaustive enumeration."""

import numpy as np
import pytest

import oracles
from hybridqkd.adversary import (
    EveKind,
    EveStrategy,
    intercept_b92,
    intercept_ghz,
)
from hybridqkd.protocol import (
    CHECK_COMBINATIONS,
    COMBINATION_TARGETS,
    RoundClass,
    b92_round,
    b92_sift,
    ghz_round,
)
from hybridqkd.quantum import make_ghz, plus_state, zero_state


def test_strategy_validation():
    assert EveStrategy().kind is EveKind.NONE
    EveStrategy(kind=EveKind.INTERCEPT_RESEND_GHZ, target_qubit=2)
    with pytest.raises(ValueError):
        EveStrategy(kind=EveKind.INTERCEPT_RESEND_GHZ, target_qubit=3)


def test_intercept_b92_rejects_multiqubit_state():
    with pytest.raises(ValueError):
        intercept_b92(make_ghz(), np.random.default_rng(0))


def test_intercept_ghz_rejects_bad_inputs():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        intercept_ghz(zero_state(1), 0, rng)
    with pytest.raises(ValueError):
        intercept_ghz(make_ghz(), 5, rng)


def test_intercept_b92_forwards_a_collapsed_state():
    # measuring |+> in Z forwards |0> or |1>; in X it forwards |+> itself,
    # so every forwarded state is a Z or X eigenstate
    eigenstates = [
        zero_state(1).amplitudes,
        np.array([0.0, 1.0], dtype=complex),
        plus_state().amplitudes,
        np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    ]
    rng = np.random.default_rng(8)
    for _ in range(40):
        forwarded = intercept_b92(plus_state(), rng)
        assert any(
            np.allclose(forwarded.amplitudes, e, atol=1e-12)
            or np.allclose(forwarded.amplitudes, -e, atol=1e-12)
            for e in eigenstates
        )


def test_b92_attack_statistics_match_enumeration():
    rate_exact, qber_exact = oracles.b92_stats(eve=True)
    assert float(rate_exact) == 0.375
    assert float(qber_exact) == pytest.approx(1.0 / 3.0)
    eve = EveStrategy(kind=EveKind.INTERCEPT_RESEND_B92)
    rng = np.random.default_rng(97)
    records = [b92_round(rng, eve=eve) for _ in range(6000)]
    sifted = b92_sift(records)
    rate = len(sifted) / len(records)
    errors = sum(a != b for a, b in zip(sifted.alice_bits, sifted.bob_bits))
    # 4 sigma bands: 0.025 on the rate at n = 6000, 0.04 on the error
    # rate at ~2250 sifted bits
    assert abs(rate - float(rate_exact)) < 0.03
    assert abs(errors / len(sifted) - float(qber_exact)) < 0.045


@pytest.mark.parametrize("target", [0, 1, 2])
def test_ghz_attack_attenuates_checks_to_half(target):
    means = oracles.ghz_eve_means(target)
    for combo in CHECK_COMBINATIONS:
        # enumeration: every check mean lands at exactly half its ideal
        assert means[combo] == pytest.approx(0.5 * COMBINATION_TARGETS[combo], abs=1e-9)

    eve = EveStrategy(kind=EveKind.INTERCEPT_RESEND_GHZ, target_qubit=target)
    rng = np.random.default_rng(1000 + target)
    sums = {c: 0.0 for c in CHECK_COMBINATIONS}
    counts = {c: 0 for c in CHECK_COMBINATIONS}
    for _ in range(8000):
        record = ghz_round(rng, eve=eve)
        if record.classification is RoundClass.CHECK:
            sums[record.combination] += record.outcome_product()
            counts[record.combination] += 1
    for combo in CHECK_COMBINATIONS:
        assert counts[combo] > 700
        mean = sums[combo] / counts[combo]
        # 4 sigma at ~1000 samples with variance 1 - 0.25 is 0.11
        assert abs(mean - means[combo]) < 0.12
        # and the deviation from the ideal exceeds the default tolerance,
        # which is what makes the attack detectable
        assert abs(mean - COMBINATION_TARGETS[combo]) > 0.25


def test_ghz_attack_leaves_all_y_product_unbiased():
    # enumeration: the all-Y outcome product has mean exactly zero both
    # with and without the attack, so it carries no attack signature
    for target in range(3):
        assert oracles.ghz_product_mean("YYY", target) == pytest.approx(0.0, abs=1e-9)
    assert oracles.ghz_product_mean("YYY") == pytest.approx(0.0, abs=1e-9)

    eve = EveStrategy(kind=EveKind.INTERCEPT_RESEND_GHZ, target_qubit=0)
    rng = np.random.default_rng(555)
    products = []
    for _ in range(8000):
        record = ghz_round(rng, eve=eve)
        if record.classification is RoundClass.KEY:
            products.append(record.outcome_product())
    # 4 sigma at ~1000 samples with unit variance is 0.13
    assert abs(float(np.mean(products))) < 0.14
