"""Depolarizing noise, fidelity bounds, and the security threshold.

The channel replaces a state with the maximally mixed state with
probability p. Two scopes are supported: a single global channel over
everything sent in a round, and an independent per-qubit variant. The
closed-form fidelities below follow from the channel acting on the GHZ
triplet (dimension 8) and the single-qubit B92 states (dimension 2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .quantum import (
    DensityMatrix,
    PauliBasis,
    StateVector,
    apply_pauli,
    basis_state,
)


class NoiseScope(enum.Enum):
    QUANTUM_CHANNEL_ONLY = "quantum_channel_only"
    ALL_QUBITS = "all_qubits"


@dataclass(frozen=True)
class NoiseConfig:
    """Depolarizing strength p in [0, 1] and where it applies."""

    p: float = 0.0
    apply_to: NoiseScope = NoiseScope.QUANTUM_CHANNEL_ONLY

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability must be in [0, 1], got {self.p!r}")


@dataclass(frozen=True)
class SecurityParams:
    """Security exponent s and nominal key length n, both positive."""

    s: int = 20
    n: int = 128

    def __post_init__(self) -> None:
        if not isinstance(self.s, int) or self.s < 1:
            raise ValueError(f"security exponent s must be a positive integer, got {self.s!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"key length n must be a positive integer, got {self.n!r}")


def depolarize(rho: DensityMatrix, p: float) -> DensityMatrix:
    """(1 - p) rho + p I/d over the full dimension of rho."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability must be in [0, 1], got {p!r}")
    d = rho.dim
    mixed = (1.0 - p) * rho.entries + (p / d) * np.eye(d)
    return DensityMatrix(rho.num_qubits, mixed)


def ghz_fidelity(p: float) -> float:
    """Fidelity of the depolarized GHZ triplet against the ideal state."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability must be in [0, 1], got {p!r}")
    return math.sqrt((1.0 - p) + p / 8.0)


def b92_fidelity(p: float) -> float:
    """Fidelity of a depolarized single-qubit signal state against itself."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability must be in [0, 1], got {p!r}")
    return math.sqrt((1.0 - p) + p / 2.0)


def combined_fidelity(p: float) -> float:
    """Worst-case fidelity across both protocol branches (min rule)."""
    return min(ghz_fidelity(p), b92_fidelity(p))


def security_condition(fidelity: float, params: SecurityParams) -> bool:
    """True when F^2 > 1 - 2^-s. Assumes 0 <= fidelity <= 1."""
    return fidelity * fidelity > 1.0 - 2.0 ** (-params.s)


def entropy_bound(params: SecurityParams) -> float:
    """Eavesdropper information bound (2n + s + 1/ln 2) * 2^-s in bits."""
    return (2.0 * params.n + params.s + 1.0 / math.log(2.0)) * 2.0 ** (-params.s)


def sample_depolarized(
    state: StateVector, noise: NoiseConfig, rng: np.random.Generator
) -> StateVector:
    """Draw one pure-state trajectory of the depolarizing channel.

    QUANTUM_CHANNEL_ONLY: with probability p the whole register is
    replaced by a uniformly random computational basis state. Averaged
    over the draw, that mixture is exactly I/d, so every downstream
    measurement statistic matches (1 - p) rho + p I/d. ALL_QUBITS: each
    qubit independently suffers a uniformly random Pauli (I, X, Y, Z)
    with probability p, which is the per-qubit depolarizing channel at
    strength p.
    """
    if noise.p == 0.0:
        return state
    if noise.apply_to is NoiseScope.QUANTUM_CHANNEL_ONLY:
        if rng.random() < noise.p:
            return basis_state(state.num_qubits, int(rng.integers(state.dim)))
        return state
    flips = (PauliBasis.X, PauliBasis.Y, PauliBasis.Z)
    for qubit in range(state.num_qubits):
        if rng.random() < noise.p:
            choice = int(rng.integers(4))
            if choice > 0:
                state = apply_pauli(state, qubit, flips[choice - 1])
    return state
