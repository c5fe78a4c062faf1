"""Session orchestration: dispatch rounds, aggregate, decide, log.

A session runs a fixed number of rounds from one seed. Every round gets
its own child RNG stream (spawned from the session seed), so reports
and round logs are bit-reproducible for a given configuration. After
the rounds finish, the orchestrator estimates fidelity from the
configured noise level, runs the correlation check over the GHZ check
rounds, evaluates the abort rules, and only then releases key material.

Abort conditions, in order: fidelity, correlation, insufficient
evidence (all three from the round-level decision), then a sifted-key
error-rate ceiling that catches interception on the two-state branch,
which leaves the GHZ checks untouched.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .adversary import EveKind, EveStrategy
from .analytics import (
    COMBINED_RATE_FACTOR,
    GHZ_KEY_ROUND_RATE,
    b92_conclusive_probability_analytic,
    estimate_qber,
)
from .noise import (
    NoiseConfig,
    NoiseScope,
    SecurityParams,
    b92_fidelity,
    combined_fidelity,
    entropy_bound,
    ghz_fidelity,
)
from .protocol import (
    DEFAULT_CHECK_TOLERANCE,
    DEFAULT_MIN_CHECK_SAMPLES,
    AbortDecision,
    B92RoundRecord,
    CheckReport,
    GhzRoundRecord,
    ProtocolChoice,
    RoundClass,
    SentState,
    SiftedKey,
    abort_decision,
    b92_round,
    b92_sift,
    coin_flip_round,
    ghz_correlation_check,
    ghz_round,
)
from .quantum import PauliBasis

SCHEMA_VERSION = 1
DEFAULT_SEED = 42
DEFAULT_QBER_THRESHOLD = 0.15
ABORT_QBER = "qber"

# Rate the measurement procedure actually realizes on the two-state
# branch: half of the stated conclusive probability, because Bob's
# random basis choice lines up with the revealing measurement half the
# time. The stated 1/2 would give a combined factor of 5/16; the
# procedure yields 3/16.
B92_SIFT_RATE_PROCEDURAL = 0.25
COMBINED_RATE_FACTOR_PROCEDURAL = 0.5 * GHZ_KEY_ROUND_RATE + 0.5 * B92_SIFT_RATE_PROCEDURAL


class SessionMode(enum.Enum):
    COMBINED = "combined"
    GHZ_ONLY = "ghz"
    B92_ONLY = "b92"


class CoinMode(enum.Enum):
    SHARED = "shared"
    TWO_COIN = "two_coin"


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session needs; two equal configs replay identically."""

    total_rounds: int
    seed: int = DEFAULT_SEED
    noise: NoiseConfig = NoiseConfig()
    eve: EveStrategy = EveStrategy()
    security: SecurityParams = SecurityParams()
    protocol: SessionMode = SessionMode.COMBINED
    coin_mode: CoinMode = CoinMode.SHARED
    check_tolerance: float = DEFAULT_CHECK_TOLERANCE
    min_check_samples: int = DEFAULT_MIN_CHECK_SAMPLES
    qber_threshold: float = DEFAULT_QBER_THRESHOLD
    eve_before_noise: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.total_rounds, int) or self.total_rounds < 1:
            raise ValueError(f"total_rounds must be >= 1, got {self.total_rounds!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if not 0.0 < self.check_tolerance < 1.0:
            raise ValueError(
                f"check_tolerance must be in (0, 1), got {self.check_tolerance!r}"
            )
        if not isinstance(self.min_check_samples, int) or self.min_check_samples < 0:
            raise ValueError(
                f"min_check_samples must be >= 0, got {self.min_check_samples!r}"
            )
        if not 0.0 < self.qber_threshold < 1.0:
            raise ValueError(
                f"qber_threshold must be in (0, 1), got {self.qber_threshold!r}"
            )


@dataclass(frozen=True)
class SessionRound:
    """One dispatched round; protocol None means a two-coin disagreement."""

    round_index: int
    protocol: ProtocolChoice | None
    ghz: GhzRoundRecord | None = None
    b92: B92RoundRecord | None = None

    def __post_init__(self) -> None:
        if self.round_index < 0:
            raise ValueError("round_index must be non-negative")
        if self.protocol is ProtocolChoice.GHZ and (
            self.ghz is None or self.b92 is not None
        ):
            raise ValueError("GHZ round must carry exactly a GHZ record")
        if self.protocol is ProtocolChoice.B92 and (
            self.b92 is None or self.ghz is not None
        ):
            raise ValueError("B92 round must carry exactly a B92 record")
        if self.protocol is None and (self.ghz is not None or self.b92 is not None):
            raise ValueError("discarded coin round carries no protocol record")

    def key_bits(self) -> int:
        if self.ghz is not None and self.ghz.classification is RoundClass.KEY:
            return 1
        if self.b92 is not None and self.b92.conclusive:
            return 1
        return 0


@dataclass(frozen=True)
class RoundCounts:
    """Raw round tallies; these survive aborts as diagnostics."""

    total_rounds: int
    ghz_rounds: int
    b92_rounds: int
    coin_discarded_rounds: int
    ghz_key_rounds: int
    ghz_check_rounds: int
    ghz_discarded_rounds: int
    b92_conclusive_rounds: int

    def __post_init__(self) -> None:
        if (
            self.ghz_rounds + self.b92_rounds + self.coin_discarded_rounds
            != self.total_rounds
        ):
            raise ValueError("round tallies must sum to total_rounds")
        if (
            self.ghz_key_rounds + self.ghz_check_rounds + self.ghz_discarded_rounds
            != self.ghz_rounds
        ):
            raise ValueError("GHZ tallies must sum to ghz_rounds")


@dataclass(frozen=True)
class Verdict:
    status: str
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.status not in ("completed", "aborted"):
            raise ValueError(f"unknown verdict status {self.status!r}")
        if (self.status == "aborted") != (self.reason is not None):
            raise ValueError("reason must be present iff aborted")

    @property
    def aborted(self) -> bool:
        return self.status == "aborted"


@dataclass(frozen=True)
class EmpiricalRates:
    """Observed per-round yields; branch rates are None when unsampled."""

    ghz_key_rate: float | None
    b92_sift_rate: float | None
    combined_bits_per_round: float


@dataclass(frozen=True)
class AnalyticsSummary:
    """Analytic reference numbers echoed alongside the observed ones."""

    b92_conclusive_probability_analytic: float
    b92_sift_rate_procedural: float
    ghz_key_round_rate: float
    combined_rate_factor_stated: float
    combined_rate_factor_procedural: float
    entropy_bound_bits: float


@dataclass(frozen=True)
class SessionReport:
    """Summary of one session; on abort all key strings are empty."""

    config: SessionConfig
    counts: RoundCounts
    verdict: Verdict
    check_report: CheckReport
    fidelity_used: float
    qber: float | None
    ghz_key_agreement: float | None
    ghz_key_bits: str
    b92_key: SiftedKey
    combined_key: str
    empirical_rates: EmpiricalRates
    analytics: AnalyticsSummary

    def __post_init__(self) -> None:
        if self.verdict.aborted:
            if self.ghz_key_bits or len(self.b92_key) or self.combined_key:
                raise ValueError("aborted session must not emit key material")
        else:
            if self.combined_key != self.ghz_key_bits + self.b92_key.alice_bits:
                raise ValueError(
                    "combined key must be the GHZ key followed by the sifted B92 key"
                )


def _branch_fidelity(config: SessionConfig) -> float:
    """Closed-form fidelity of what the session actually transmits."""
    p = config.noise.p
    if config.protocol is SessionMode.GHZ_ONLY:
        return ghz_fidelity(p)
    if config.protocol is SessionMode.B92_ONLY:
        return b92_fidelity(p)
    return combined_fidelity(p)


def simulate_rounds(config: SessionConfig) -> list[SessionRound]:
    """Run every round of the session and return the per-round records.

    Round i consumes only the i-th child stream of the session seed, so
    records are independent of how many rounds precede them.
    """
    children = np.random.SeedSequence(config.seed).spawn(config.total_rounds)
    rounds: list[SessionRound] = []
    for index, child in enumerate(children):
        rng = np.random.default_rng(child)
        if config.protocol is SessionMode.GHZ_ONLY:
            choice: ProtocolChoice | None = ProtocolChoice.GHZ
        elif config.protocol is SessionMode.B92_ONLY:
            choice = ProtocolChoice.B92
        elif config.coin_mode is CoinMode.SHARED:
            choice = coin_flip_round(rng)
        else:
            first = coin_flip_round(rng)
            second = coin_flip_round(rng)
            choice = first if first is second else None

        if choice is ProtocolChoice.GHZ:
            record = SessionRound(
                index,
                choice,
                ghz=ghz_round(rng, config.noise, config.eve, config.eve_before_noise),
            )
        elif choice is ProtocolChoice.B92:
            record = SessionRound(
                index,
                choice,
                b92=b92_round(rng, config.noise, config.eve, config.eve_before_noise),
            )
        else:
            record = SessionRound(index, None)
        rounds.append(record)
    return rounds


def summarize_rounds(
    config: SessionConfig, rounds: Sequence[SessionRound]
) -> SessionReport:
    """Aggregate round records, apply the abort rules, emit the report."""
    ghz_records = [r.ghz for r in rounds if r.ghz is not None]
    b92_records = [r.b92 for r in rounds if r.b92 is not None]
    b92_indices = [r.round_index for r in rounds if r.b92 is not None]
    coin_discards = sum(1 for r in rounds if r.protocol is None)

    key_records = [g for g in ghz_records if g.classification is RoundClass.KEY]
    check_records = [g for g in ghz_records if g.classification is RoundClass.CHECK]
    discard_records = [
        g for g in ghz_records if g.classification is RoundClass.DISCARDED
    ]

    counts = RoundCounts(
        total_rounds=len(rounds),
        ghz_rounds=len(ghz_records),
        b92_rounds=len(b92_records),
        coin_discarded_rounds=coin_discards,
        ghz_key_rounds=len(key_records),
        ghz_check_rounds=len(check_records),
        ghz_discarded_rounds=len(discard_records),
        b92_conclusive_rounds=sum(1 for b in b92_records if b.conclusive),
    )

    check_report = ghz_correlation_check(check_records, config.check_tolerance)
    fidelity = _branch_fidelity(config)

    ghz_key_bits = "".join(str(g.key_bit) for g in key_records)
    local_sift = b92_sift(b92_records)
    sifted = SiftedKey(
        local_sift.alice_bits,
        local_sift.bob_bits,
        tuple(b92_indices[i] for i in local_sift.source_rounds),
    )

    qber = estimate_qber(sifted) if len(sifted) else None
    if key_records:
        agreements = sum(
            1 for g in key_records if g.key_bit == g.bob_charlie_bit()
        )
        ghz_key_agreement: float | None = agreements / len(key_records)
    else:
        ghz_key_agreement = None

    # sessions pinned to the two-state branch produce no GHZ evidence,
    # so the evidence floor is waived for them
    min_samples = 0 if config.protocol is SessionMode.B92_ONLY else config.min_check_samples
    decision = abort_decision(check_report, fidelity, config.security, min_samples)
    if not decision.abort and qber is not None and qber > config.qber_threshold:
        decision = AbortDecision(True, ABORT_QBER)

    if decision.abort:
        verdict = Verdict("aborted", decision.reason)
        ghz_key_bits = ""
        sifted = SiftedKey("", "", ())
        combined_key = ""
    else:
        verdict = Verdict("completed", None)
        combined_key = ghz_key_bits + sifted.alice_bits

    rates = EmpiricalRates(
        ghz_key_rate=(
            counts.ghz_key_rounds / counts.ghz_rounds if counts.ghz_rounds else None
        ),
        b92_sift_rate=(
            counts.b92_conclusive_rounds / counts.b92_rounds
            if counts.b92_rounds
            else None
        ),
        combined_bits_per_round=(
            (counts.ghz_key_rounds + counts.b92_conclusive_rounds)
            / counts.total_rounds
        ),
    )
    analytics = AnalyticsSummary(
        b92_conclusive_probability_analytic=b92_conclusive_probability_analytic(),
        b92_sift_rate_procedural=B92_SIFT_RATE_PROCEDURAL,
        ghz_key_round_rate=GHZ_KEY_ROUND_RATE,
        combined_rate_factor_stated=COMBINED_RATE_FACTOR,
        combined_rate_factor_procedural=COMBINED_RATE_FACTOR_PROCEDURAL,
        entropy_bound_bits=entropy_bound(config.security),
    )
    return SessionReport(
        config=config,
        counts=counts,
        verdict=verdict,
        check_report=check_report,
        fidelity_used=fidelity,
        qber=qber,
        ghz_key_agreement=ghz_key_agreement,
        ghz_key_bits=ghz_key_bits,
        b92_key=sifted,
        combined_key=combined_key,
        empirical_rates=rates,
        analytics=analytics,
    )


def run_session(config: SessionConfig) -> SessionReport:
    """Simulate a full session and summarize it."""
    return summarize_rounds(config, simulate_rounds(config))


# -- serialization ---------------------------------------------------------


def config_to_dict(config: SessionConfig) -> dict:
    return {
        "total_rounds": config.total_rounds,
        "seed": config.seed,
        "noise": {"p": config.noise.p, "apply_to": config.noise.apply_to.value},
        "eve": {"kind": config.eve.kind.value, "target_qubit": config.eve.target_qubit},
        "security": {"s": config.security.s, "n": config.security.n},
        "protocol": config.protocol.value,
        "coin_mode": config.coin_mode.value,
        "check_tolerance": config.check_tolerance,
        "min_check_samples": config.min_check_samples,
        "qber_threshold": config.qber_threshold,
        "eve_before_noise": config.eve_before_noise,
    }


def config_from_dict(data: dict) -> SessionConfig:
    try:
        return SessionConfig(
            total_rounds=data["total_rounds"],
            seed=data["seed"],
            noise=NoiseConfig(
                p=data["noise"]["p"],
                apply_to=NoiseScope(data["noise"]["apply_to"]),
            ),
            eve=EveStrategy(
                kind=EveKind(data["eve"]["kind"]),
                target_qubit=data["eve"]["target_qubit"],
            ),
            security=SecurityParams(
                s=data["security"]["s"], n=data["security"]["n"]
            ),
            protocol=SessionMode(data["protocol"]),
            coin_mode=CoinMode(data["coin_mode"]),
            check_tolerance=data["check_tolerance"],
            min_check_samples=data["min_check_samples"],
            qber_threshold=data["qber_threshold"],
            eve_before_noise=data["eve_before_noise"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid session config: {exc}") from exc


def report_to_dict(report: SessionReport) -> dict:
    """Plain-data view of a report; stable key set, JSON-safe values."""
    check = report.check_report
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config_to_dict(report.config),
        "verdict": {"status": report.verdict.status, "reason": report.verdict.reason},
        "counts": {
            "total_rounds": report.counts.total_rounds,
            "ghz_rounds": report.counts.ghz_rounds,
            "b92_rounds": report.counts.b92_rounds,
            "coin_discarded_rounds": report.counts.coin_discarded_rounds,
            "ghz_key_rounds": report.counts.ghz_key_rounds,
            "ghz_check_rounds": report.counts.ghz_check_rounds,
            "ghz_discarded_rounds": report.counts.ghz_discarded_rounds,
            "b92_conclusive_rounds": report.counts.b92_conclusive_rounds,
        },
        "fidelity_used": report.fidelity_used,
        "qber": report.qber,
        "ghz_key_agreement": report.ghz_key_agreement,
        "check_report": {
            "tolerance": check.tolerance,
            "passed": check.passed,
            "combinations": [
                {
                    "combination": s.combination,
                    "sample_count": s.sample_count,
                    "mean_product": s.mean_product,
                }
                for s in check.combinations
            ],
        },
        "keys": {
            "ghz_key_bits": report.ghz_key_bits,
            "b92_alice_bits": report.b92_key.alice_bits,
            "b92_bob_bits": report.b92_key.bob_bits,
            "b92_source_rounds": list(report.b92_key.source_rounds),
            "combined_key_bits": report.combined_key,
        },
        "empirical_rates": {
            "ghz_key_rate": report.empirical_rates.ghz_key_rate,
            "b92_sift_rate": report.empirical_rates.b92_sift_rate,
            "combined_bits_per_round": report.empirical_rates.combined_bits_per_round,
        },
        "analytics": {
            "b92_conclusive_probability_analytic": (
                report.analytics.b92_conclusive_probability_analytic
            ),
            "b92_sift_rate_procedural": report.analytics.b92_sift_rate_procedural,
            "ghz_key_round_rate": report.analytics.ghz_key_round_rate,
            "combined_rate_factor_stated": report.analytics.combined_rate_factor_stated,
            "combined_rate_factor_procedural": (
                report.analytics.combined_rate_factor_procedural
            ),
            "entropy_bound_bits": report.analytics.entropy_bound_bits,
        },
    }


def canonical_json(data) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, no NaN."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False)


# -- round logs ------------------------------------------------------------


class RoundLogError(ValueError):
    """A round log could not be parsed or failed validation."""


def round_to_dict(record: SessionRound) -> dict:
    if record.protocol is None:
        return {
            "round_index": record.round_index,
            "protocol": "COIN",
            "classification": "discarded",
        }
    if record.protocol is ProtocolChoice.GHZ:
        assert record.ghz is not None
        g = record.ghz
        return {
            "round_index": record.round_index,
            "protocol": "GHZ",
            "bases": "".join(b.value for b in g.bases),
            "outcomes": list(g.outcomes),
            "classification": g.classification.value,
            "combination": g.combination,
            "key_bit": g.key_bit,
        }
    assert record.b92 is not None
    b = record.b92
    return {
        "round_index": record.round_index,
        "protocol": "B92",
        "alice_bit": b.alice_bit,
        "sent_state": b.sent_state.value,
        "bob_bit": b.bob_bit,
        "bob_basis": b.bob_basis.value,
        "bob_outcome": b.bob_outcome,
        "conclusive": b.conclusive,
    }


def round_from_dict(data: dict) -> SessionRound:
    protocol = data["protocol"]
    if protocol == "COIN":
        return SessionRound(data["round_index"], None)
    if protocol == "GHZ":
        ghz = GhzRoundRecord(
            bases=tuple(PauliBasis(ch) for ch in data["bases"]),
            outcomes=tuple(data["outcomes"]),
            classification=RoundClass(data["classification"]),
            combination=data["combination"],
            key_bit=data["key_bit"],
        )
        return SessionRound(data["round_index"], ProtocolChoice.GHZ, ghz=ghz)
    if protocol == "B92":
        b92 = B92RoundRecord(
            alice_bit=data["alice_bit"],
            sent_state=SentState(data["sent_state"]),
            bob_bit=data["bob_bit"],
            bob_basis=PauliBasis(data["bob_basis"]),
            bob_outcome=data["bob_outcome"],
            conclusive=data["conclusive"],
        )
        return SessionRound(data["round_index"], ProtocolChoice.B92, b92=b92)
    raise ValueError(f"unknown protocol tag {protocol!r}")


def write_round_log(
    rounds: Iterable[SessionRound], path: str | Path, config: SessionConfig
) -> None:
    """Write a JSONL round log: a header line, then one line per round."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in render_round_log(rounds, config):
            fh.write(line + "\n")


def render_round_log(
    rounds: Iterable[SessionRound], config: SessionConfig
) -> list[str]:
    header = {"schema_version": SCHEMA_VERSION, "config": config_to_dict(config)}
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(round_to_dict(r), sort_keys=True) for r in rounds)
    return lines


def read_round_log(path: str | Path) -> tuple[SessionConfig, list[SessionRound]]:
    """Parse a round log back into records, validating every line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise RoundLogError("round log is empty, expected a header line")

    def parse(lineno: int, text: str) -> dict:
        try:
            value = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RoundLogError(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(value, dict):
            raise RoundLogError(f"line {lineno}: expected an object")
        return value

    header = parse(1, lines[0])
    if header.get("schema_version") != SCHEMA_VERSION:
        raise RoundLogError(
            f"line 1: unsupported schema_version {header.get('schema_version')!r}"
        )
    try:
        config = config_from_dict(header["config"])
    except (KeyError, ValueError) as exc:
        raise RoundLogError(f"line 1: bad config: {exc}") from exc

    rounds = []
    for lineno, text in enumerate(lines[1:], start=2):
        data = parse(lineno, text)
        try:
            rounds.append(round_from_dict(data))
        except (KeyError, TypeError, ValueError) as exc:
            raise RoundLogError(f"line {lineno}: invalid round record: {exc}") from exc
    return config, rounds


# -- comparisons -----------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    protocol: str
    total_rounds: int
    seed: int
    key_bits: int
    bits_per_round: float
    verdict: str
    abort_reason: str | None


def compare_protocols(configs: Sequence[SessionConfig]) -> list[ComparisonRow]:
    """Run each config and tabulate key yields, best first.

    All configs must share a round budget so the rows are comparable.
    """
    if not configs:
        raise ValueError("need at least one config to compare")
    budgets = {c.total_rounds for c in configs}
    if len(budgets) != 1:
        raise ValueError(f"configs must share total_rounds, got {sorted(budgets)}")
    rows = []
    for config in configs:
        report = run_session(config)
        key_bits = len(report.combined_key)
        rows.append(
            ComparisonRow(
                label=config.protocol.value,
                protocol=config.protocol.value,
                total_rounds=config.total_rounds,
                seed=config.seed,
                key_bits=key_bits,
                bits_per_round=key_bits / config.total_rounds,
                verdict=report.verdict.status,
                abort_reason=report.verdict.reason,
            )
        )
    rows.sort(key=lambda r: (-r.key_bits, r.label))
    return rows


def standard_comparison(base: SessionConfig) -> list[SessionConfig]:
    """The three-way comparison: combined, GHZ-only, B92-only, one seed."""
    return [
        replace(base, protocol=SessionMode.COMBINED),
        replace(base, protocol=SessionMode.GHZ_ONLY),
        replace(base, protocol=SessionMode.B92_ONLY),
    ]


@dataclass(frozen=True)
class BatchRow:
    batch_index: int
    rounds: int
    key_bits: int
    cumulative_key_bits: int


def batch_key_counts(config: SessionConfig, num_batches: int) -> list[BatchRow]:
    """Split one session into contiguous batches and count raw key bits.

    Reporting only: sifting happens per round, so batching does not
    change the physics, it changes the resolution of the yield curve.
    """
    if num_batches < 1:
        raise ValueError(f"num_batches must be >= 1, got {num_batches!r}")
    if num_batches > config.total_rounds:
        raise ValueError("cannot split a session into more batches than rounds")
    rounds = simulate_rounds(config)
    base, remainder = divmod(len(rounds), num_batches)
    rows = []
    cumulative = 0
    start = 0
    for index in range(num_batches):
        size = base + (1 if index < remainder else 0)
        chunk = rounds[start : start + size]
        start += size
        bits = sum(r.key_bits() for r in chunk)
        cumulative += bits
        rows.append(
            BatchRow(
                batch_index=index,
                rounds=len(chunk),
                key_bits=bits,
                cumulative_key_bits=cumulative,
            )
        )
    return rows
