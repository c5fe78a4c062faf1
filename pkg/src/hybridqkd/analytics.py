"""Key-rate formulas, error estimation, and the correlation contradiction.

The two engines keep different fractions of their rounds: a GHZ round
yields a key bit only when all three parties drew Y (rate 1/8), while a
B92 round survives sifting at the protocol's conclusive rate. After
error correction at observed error rate delta, the usable fraction
shrinks by the binary entropy factor (1 - h(delta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocol import CHECK_COMBINATIONS, SiftedKey
from .quantum import (
    PauliBasis,
    StateVector,
    expectation_pauli_product,
    make_ghz,
    plus_state,
    zero_state,
)

GHZ_KEY_ROUND_RATE = 0.125
B92_SIFT_RATE_STATED = 0.5
COMBINED_RATE_FACTOR = 5.0 / 16.0


def binary_entropy(delta: float) -> float:
    """h(delta) = -d log2 d - (1-d) log2 (1-d), with h(0) = h(1) = 0."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"error rate must be in [0, 1], got {delta!r}")
    if delta == 0.0 or delta == 1.0:
        return 0.0
    return float(-delta * math.log2(delta) - (1.0 - delta) * math.log2(1.0 - delta))


@dataclass(frozen=True)
class KeyRateInputs:
    """Total round budget n and post-sifting error rate delta."""

    n: int
    delta: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"round budget must be a non-negative integer, got {self.n!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"error rate must be in [0, 1], got {self.delta!r}")


def em_final(inputs: KeyRateInputs) -> float:
    """Final key yield of the entanglement branch: n/8 * (1 - h(delta))."""
    return inputs.n * GHZ_KEY_ROUND_RATE * (1.0 - binary_entropy(inputs.delta))


def nem_final(inputs: KeyRateInputs) -> float:
    """Final key yield of the two-state branch: n/2 * (1 - h(delta)).

    Uses the stated conclusive rate of one half for the branch.
    """
    return inputs.n * B92_SIFT_RATE_STATED * (1.0 - binary_entropy(inputs.delta))


def combined_key_length(n_total: int, delta: float) -> float:
    """Expected final key of the coin-dispatched hybrid.

    Half the rounds go to each branch, so the yield is
    (em_final + nem_final)/2 over n_total, which reduces to
    5 n (1 - h(delta)) / 16.
    """
    inputs = KeyRateInputs(n_total, delta)
    factor = 1.0 - binary_entropy(inputs.delta)
    return n_total * COMBINED_RATE_FACTOR * factor


def b92_conclusive_probability_analytic(
    psi0: StateVector | None = None, psi1: StateVector | None = None
) -> float:
    """Stated conclusive probability 1 - |<psi0|psi1>|^2 for two signals.

    Defaults to the |0> / |+> pair, giving one half. The empirically
    realized rate of the measurement procedure is half of this, because
    Bob's random basis choice only lines up with the revealing
    measurement half the time; session reports surface both numbers.
    """
    psi0 = psi0 if psi0 is not None else zero_state(1)
    psi1 = psi1 if psi1 is not None else plus_state()
    if psi0.num_qubits != psi1.num_qubits:
        raise ValueError("signal states must have equal dimension")
    overlap = complex(np.vdot(psi0.amplitudes, psi1.amplitudes))
    return 1.0 - abs(overlap) ** 2


def estimate_qber(key: SiftedKey) -> float:
    """Fraction of positions where Alice's and Bob's sifted bits differ."""
    if len(key) == 0:
        raise ValueError("cannot estimate an error rate from an empty key")
    mismatches = sum(a != b for a, b in zip(key.alice_bits, key.bob_bits))
    return mismatches / len(key)


@dataclass(frozen=True)
class ParadoxReport:
    """Check-combination expectations against the local-realist prediction.

    Any assignment of fixed +-1 values to the six single-party
    observables forces the product of the four combinations to +1; the
    quantum expectations multiply to -1.
    """

    expectations: tuple[tuple[str, float], ...]
    quantum_product: float
    lhv_product: int


def ghz_paradox_report() -> ParadoxReport:
    """Evaluate the four check combinations analytically on the GHZ state."""
    state = make_ghz()
    expectations = []
    product = 1.0
    for combo in CHECK_COMBINATIONS:
        bases = [PauliBasis(ch) for ch in combo]
        value = expectation_pauli_product(state, bases)
        expectations.append((combo, value))
        product *= value
    return ParadoxReport(
        expectations=tuple(expectations),
        quantum_product=product,
        lhv_product=1,
    )
