"""Intercept-resend eavesdropping strategies.

Eve measures a qubit in transit in a randomly chosen basis and forwards
the collapsed state. Against the two-state protocol she picks Z or X
with equal probability; against the GHZ triplet she grabs one qubit and
picks X or Y. Either way the disturbance shows up downstream, as a
raised error rate on the sifted key or as washed-out check correlations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .quantum import PauliBasis, StateVector, measure_pauli

GHZ_QUBITS = 3


class EveKind(enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND_B92 = "intercept_resend_b92"
    INTERCEPT_RESEND_GHZ = "intercept_resend_ghz"


@dataclass(frozen=True)
class EveStrategy:
    """Eavesdropper configuration.

    ``target_qubit`` is only meaningful for the GHZ strategy and names
    which of the three flying qubits Eve intercepts.
    """

    kind: EveKind = EveKind.NONE
    target_qubit: int = 0

    def __post_init__(self) -> None:
        if self.kind is EveKind.INTERCEPT_RESEND_GHZ and not (
            0 <= self.target_qubit < GHZ_QUBITS
        ):
            raise ValueError(
                f"target_qubit must be in [0, {GHZ_QUBITS}), got {self.target_qubit!r}"
            )


def intercept_b92(state: StateVector, rng: np.random.Generator) -> StateVector:
    """Measure a single-qubit signal in a random Z or X basis and resend.

    Eve learns the outcome but the caller only sees the collapsed state
    she forwards.
    """
    if state.num_qubits != 1:
        raise ValueError("B92 interception expects a single-qubit state")
    basis = PauliBasis.Z if rng.integers(2) == 0 else PauliBasis.X
    _, forwarded = measure_pauli(state, 0, basis, rng)
    return forwarded


def intercept_ghz(
    state: StateVector, target_qubit: int, rng: np.random.Generator
) -> StateVector:
    """Measure one qubit of the GHZ triplet in a random X or Y basis.

    The untouched qubits ride along; the collapse still breaks the
    three-way correlations that the check rounds test.
    """
    if state.num_qubits != GHZ_QUBITS:
        raise ValueError("GHZ interception expects a three-qubit state")
    if not 0 <= target_qubit < GHZ_QUBITS:
        raise ValueError(
            f"target_qubit must be in [0, {GHZ_QUBITS}), got {target_qubit!r}"
        )
    basis = PauliBasis.X if rng.integers(2) == 0 else PauliBasis.Y
    _, forwarded = measure_pauli(state, target_qubit, basis, rng)
    return forwarded
