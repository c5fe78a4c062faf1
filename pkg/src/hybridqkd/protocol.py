"""Round-level engines: the dispatch coin, GHZ rounds, and B92 rounds.

A round of the combined protocol starts with a quantum coin flip
(Hadamard on |0>, computational readout) that routes the round to either
the three-party GHZ engine or the two-party B92 engine.

GHZ rounds: each party measures its qubit in X or Y chosen uniformly.
All-Y rounds carry key bits, the four combinations XXX, XYY, YXY, YYX
are correlation checks with ideal products +1, -1, -1, -1, and the
remaining combinations are discarded. Alice's key bit maps outcome +1
to 0 and -1 to 1; Bob and Charlie jointly reconstruct it from minus the
product of their outcomes.

B92 rounds: Alice sends |0> for bit 0 or |+> for bit 1; Bob measures Z
or X at random and keeps only conclusive outcomes, those that are
impossible for one of the two signal states (outcome -1 in either
basis). A conclusive Z outcome means the state was not |0>, decoding to
1; a conclusive X outcome decodes to 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adversary import EveKind, EveStrategy, intercept_b92, intercept_ghz
from .noise import NoiseConfig, SecurityParams, sample_depolarized, security_condition
from .quantum import (
    HADAMARD,
    PauliBasis,
    StateVector,
    _measure_pauli_raw,
    apply_gate,
    make_ghz,
    plus_state,
    zero_state,
)

CHECK_COMBINATIONS: tuple[str, ...] = ("XXX", "XYY", "YXY", "YYX")
COMBINATION_TARGETS: dict[str, float] = {
    "XXX": 1.0,
    "XYY": -1.0,
    "YXY": -1.0,
    "YYX": -1.0,
}
KEY_COMBINATION = "YYY"

DEFAULT_CHECK_TOLERANCE = 0.25
DEFAULT_MIN_CHECK_SAMPLES = 16

ABORT_FIDELITY = "fidelity"
ABORT_CORRELATION = "correlation"
ABORT_INSUFFICIENT = "insufficient-evidence"


class ProtocolChoice(enum.Enum):
    GHZ = "GHZ"
    B92 = "B92"


class RoundClass(enum.Enum):
    KEY = "key"
    CHECK = "check"
    DISCARDED = "discarded"


class SentState(enum.Enum):
    ZERO = "zero"
    PLUS = "plus"


# shared single-qubit states for the round engines; StateVector
# amplitudes are immutable so reuse is safe
_COIN_STATE = apply_gate(zero_state(1), HADAMARD, [0])
_B92_SIGNALS = (zero_state(1), plus_state())


def coin_flip_round(rng: np.random.Generator) -> ProtocolChoice:
    """Measure H|0> in the computational basis to pick the protocol.

    Outcome +1 (the |0> branch) selects GHZ, -1 selects B92; each comes
    up with probability one half.
    """
    outcome, _ = _measure_pauli_raw(_COIN_STATE.amplitudes, 1, 0, PauliBasis.Z, rng)
    return ProtocolChoice.GHZ if outcome == 1 else ProtocolChoice.B92


@dataclass(frozen=True)
class GhzRoundRecord:
    """One GHZ round: bases, outcomes, and its role in the protocol."""

    bases: tuple[PauliBasis, PauliBasis, PauliBasis]
    outcomes: tuple[int, int, int]
    classification: RoundClass
    combination: str | None
    key_bit: int | None

    def __post_init__(self) -> None:
        if len(self.bases) != 3 or len(self.outcomes) != 3:
            raise ValueError("GHZ round needs exactly three bases and outcomes")
        if any(b is PauliBasis.Z for b in self.bases):
            raise ValueError("GHZ parties only measure X or Y")
        if any(o not in (-1, 1) for o in self.outcomes):
            raise ValueError(f"outcomes must be +-1, got {self.outcomes!r}")
        combo = "".join(b.value for b in self.bases)
        expected_class = (
            RoundClass.KEY
            if combo == KEY_COMBINATION
            else RoundClass.CHECK
            if combo in COMBINATION_TARGETS
            else RoundClass.DISCARDED
        )
        if self.classification is not expected_class:
            raise ValueError(
                f"bases {combo} imply {expected_class.value}, got {self.classification.value}"
            )
        if self.classification is RoundClass.CHECK:
            if self.combination != combo:
                raise ValueError(f"check round must carry combination {combo!r}")
        elif self.combination is not None:
            raise ValueError("only check rounds carry a combination")
        if self.classification is RoundClass.KEY:
            if self.key_bit != (0 if self.outcomes[0] == 1 else 1):
                raise ValueError("key bit must encode Alice's outcome")
        elif self.key_bit is not None:
            raise ValueError("only key rounds carry a key bit")

    def outcome_product(self) -> int:
        return self.outcomes[0] * self.outcomes[1] * self.outcomes[2]

    def bob_charlie_bit(self) -> int:
        """Bit the receivers reconstruct: 0 when -(b*c) = +1, else 1."""
        return (1 + self.outcomes[1] * self.outcomes[2]) // 2


def _classify(bases: Sequence[PauliBasis], outcomes: Sequence[int]) -> GhzRoundRecord:
    combo = "".join(b.value for b in bases)
    if combo == KEY_COMBINATION:
        classification = RoundClass.KEY
        combination = None
        key_bit = 0 if outcomes[0] == 1 else 1
    elif combo in COMBINATION_TARGETS:
        classification = RoundClass.CHECK
        combination = combo
        key_bit = None
    else:
        classification = RoundClass.DISCARDED
        combination = None
        key_bit = None
    return GhzRoundRecord(
        bases=tuple(bases),
        outcomes=tuple(outcomes),
        classification=classification,
        combination=combination,
        key_bit=key_bit,
    )


def ghz_round(
    rng: np.random.Generator,
    noise: NoiseConfig | None = None,
    eve: EveStrategy | None = None,
    eve_first: bool = False,
) -> GhzRoundRecord:
    """Run one GHZ round: distribute, disturb, measure, classify.

    Qubit 0 belongs to Alice, 1 to Bob, 2 to Charlie. The channel noise
    acts before Eve unless ``eve_first`` is set.
    """
    bases = tuple(
        PauliBasis.X if rng.integers(2) == 0 else PauliBasis.Y for _ in range(3)
    )
    state = make_ghz()

    def _eve(s: StateVector) -> StateVector:
        if eve is not None and eve.kind is EveKind.INTERCEPT_RESEND_GHZ:
            return intercept_ghz(s, eve.target_qubit, rng)
        return s

    def _noise(s: StateVector) -> StateVector:
        if noise is not None:
            return sample_depolarized(s, noise, rng)
        return s

    state = _noise(_eve(state)) if eve_first else _eve(_noise(state))

    amps = state.amplitudes
    outcomes = []
    for qubit in range(3):
        outcome, amps = _measure_pauli_raw(amps, 3, qubit, bases[qubit], rng)
        outcomes.append(outcome)
    return _classify(bases, outcomes)


@dataclass(frozen=True)
class B92RoundRecord:
    """One B92 round: what Alice sent, how Bob measured, what he saw."""

    alice_bit: int
    sent_state: SentState
    bob_bit: int
    bob_basis: PauliBasis
    bob_outcome: int
    conclusive: bool

    def __post_init__(self) -> None:
        if self.alice_bit not in (0, 1) or self.bob_bit not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        expected_state = SentState.ZERO if self.alice_bit == 0 else SentState.PLUS
        if self.sent_state is not expected_state:
            raise ValueError(f"alice_bit {self.alice_bit} sends {expected_state.value}")
        expected_basis = PauliBasis.Z if self.bob_bit == 0 else PauliBasis.X
        if self.bob_basis is not expected_basis:
            raise ValueError(f"bob_bit {self.bob_bit} measures {expected_basis.value}")
        if self.bob_outcome not in (-1, 1):
            raise ValueError(f"outcome must be +-1, got {self.bob_outcome!r}")
        if self.conclusive != (self.bob_outcome == -1):
            raise ValueError("conclusive iff the outcome excludes one signal state")

    def decoded_bit(self) -> int:
        """Bob's decoded bit; only meaningful when conclusive.

        A -1 outcome in Z rules out |0>, so Alice sent |+> (bit 1); a -1
        outcome in X rules out |+>, so she sent |0> (bit 0).
        """
        if not self.conclusive:
            raise ValueError("inconclusive round carries no decoded bit")
        return 1 if self.bob_basis is PauliBasis.Z else 0


def b92_round(
    rng: np.random.Generator,
    noise: NoiseConfig | None = None,
    eve: EveStrategy | None = None,
    eve_first: bool = False,
) -> B92RoundRecord:
    """Run one B92 round over the noisy, possibly intercepted channel."""
    alice_bit = int(rng.integers(2))
    state = _B92_SIGNALS[alice_bit]

    def _eve(s: StateVector) -> StateVector:
        if eve is not None and eve.kind is EveKind.INTERCEPT_RESEND_B92:
            return intercept_b92(s, rng)
        return s

    def _noise(s: StateVector) -> StateVector:
        if noise is not None:
            return sample_depolarized(s, noise, rng)
        return s

    state = _noise(_eve(state)) if eve_first else _eve(_noise(state))

    bob_bit = int(rng.integers(2))
    bob_basis = PauliBasis.Z if bob_bit == 0 else PauliBasis.X
    outcome, _ = _measure_pauli_raw(state.amplitudes, 1, 0, bob_basis, rng)
    # conclusive iff the outcome is impossible for one signal state: the
    # -1 eigenstate in Z (|1>) excludes |0>, in X (|->) excludes |+>
    conclusive = outcome == -1
    return B92RoundRecord(
        alice_bit=alice_bit,
        sent_state=SentState.ZERO if alice_bit == 0 else SentState.PLUS,
        bob_bit=bob_bit,
        bob_basis=bob_basis,
        bob_outcome=outcome,
        conclusive=conclusive,
    )


@dataclass(frozen=True)
class SiftedKey:
    """Alice/Bob bit strings kept after sifting, with source round indices."""

    alice_bits: str
    bob_bits: str
    source_rounds: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.alice_bits) == len(self.bob_bits) == len(self.source_rounds)):
            raise ValueError("sifted key fields must have equal length")
        for bits in (self.alice_bits, self.bob_bits):
            if bits.strip("01"):
                raise ValueError(f"key must be a bit string, got {bits!r}")

    def __len__(self) -> int:
        return len(self.alice_bits)


def b92_sift(records: Sequence[B92RoundRecord]) -> SiftedKey:
    """Keep conclusive rounds; indices refer to positions in ``records``."""
    alice = []
    bob = []
    sources = []
    for index, record in enumerate(records):
        if record.conclusive:
            alice.append(str(record.alice_bit))
            bob.append(str(record.decoded_bit()))
            sources.append(index)
    return SiftedKey("".join(alice), "".join(bob), tuple(sources))


@dataclass(frozen=True)
class CombinationStat:
    """Sample count and mean outcome product for one check combination."""

    combination: str
    sample_count: int
    mean_product: float | None

    def __post_init__(self) -> None:
        if self.combination not in COMBINATION_TARGETS:
            raise ValueError(f"unknown check combination {self.combination!r}")
        if (self.mean_product is None) != (self.sample_count == 0):
            raise ValueError("mean_product must be present iff samples exist")


@dataclass(frozen=True)
class CheckReport:
    """Per-combination statistics plus the overall pass verdict."""

    combinations: tuple[CombinationStat, ...]
    tolerance: float
    passed: bool

    def stat(self, combination: str) -> CombinationStat:
        for s in self.combinations:
            if s.combination == combination:
                return s
        raise KeyError(combination)

    def sampled_counts(self) -> dict[str, int]:
        return {s.combination: s.sample_count for s in self.combinations}


def ghz_correlation_check(
    records: Sequence[GhzRoundRecord], tolerance: float = DEFAULT_CHECK_TOLERANCE
) -> CheckReport:
    """Compare mean outcome products of check rounds against ideal values.

    Every record must be a check round. A combination passes when its
    mean product lies within ``tolerance`` of the ideal; combinations
    with no samples are reported unsampled and do not fail the check,
    so an empty record list passes vacuously.
    """
    if not 0.0 < tolerance < 1.0:
        raise ValueError(f"tolerance must be in (0, 1), got {tolerance!r}")
    sums: dict[str, float] = {c: 0.0 for c in CHECK_COMBINATIONS}
    counts: dict[str, int] = {c: 0 for c in CHECK_COMBINATIONS}
    for record in records:
        if record.classification is not RoundClass.CHECK:
            raise ValueError("correlation check only accepts check rounds")
        assert record.combination is not None
        sums[record.combination] += record.outcome_product()
        counts[record.combination] += 1
    stats = []
    passed = True
    for combo in CHECK_COMBINATIONS:
        count = counts[combo]
        mean = sums[combo] / count if count else None
        if mean is not None and abs(mean - COMBINATION_TARGETS[combo]) > tolerance:
            passed = False
        stats.append(CombinationStat(combo, count, mean))
    return CheckReport(tuple(stats), tolerance, passed)


@dataclass(frozen=True)
class AbortDecision:
    """Whether to abort the session, and the first triggered reason."""

    abort: bool
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.abort != (self.reason is not None):
            raise ValueError("reason must be present iff aborting")


def abort_decision(
    check: CheckReport,
    fidelity: float,
    params: SecurityParams,
    min_check_samples: int = DEFAULT_MIN_CHECK_SAMPLES,
) -> AbortDecision:
    """Evaluate the abort conditions in fixed order.

    1. fidelity: F^2 <= 1 - 2^-s
    2. correlation: the check report failed
    3. insufficient-evidence: some combination has fewer than
       ``min_check_samples`` samples

    The first condition that fires names the reason; otherwise continue.
    With ``min_check_samples`` of 0 the evidence requirement is waived.
    """
    if min_check_samples < 0:
        raise ValueError(f"min_check_samples must be >= 0, got {min_check_samples!r}")
    if not security_condition(fidelity, params):
        return AbortDecision(True, ABORT_FIDELITY)
    if not check.passed:
        return AbortDecision(True, ABORT_CORRELATION)
    if any(s.sample_count < min_check_samples for s in check.combinations):
        return AbortDecision(True, ABORT_INSUFFICIENT)
    return AbortDecision(False, None)
