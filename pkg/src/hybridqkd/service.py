"""HTTP service exposing session runs, comparisons, sweeps, and the paradox.

The simulator itself is stateless request-to-response work, so every
endpoint validates a request model, runs the corresponding orchestrator
call, and returns a response model. The CLI is a thin client of this
service; nothing protocol-level lives here.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import __version__
from .adversary import EveKind, EveStrategy
from .analytics import ghz_paradox_report
from .noise import (
    NoiseConfig,
    NoiseScope,
    SecurityParams,
    b92_fidelity,
    combined_fidelity,
    ghz_fidelity,
    security_condition,
)
from .session import (
    DEFAULT_QBER_THRESHOLD,
    DEFAULT_SEED,
    SCHEMA_VERSION,
    CoinMode,
    SessionConfig,
    SessionMode,
    batch_key_counts,
    compare_protocols,
    render_round_log,
    report_to_dict,
    simulate_rounds,
    standard_comparison,
    summarize_rounds,
)

GRID_EPS = 1e-9


# -- request models ---------------------------------------------------------


class NoiseModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: float = Field(0.0, ge=0.0, le=1.0)
    apply_to: Literal["quantum_channel_only", "all_qubits"] = "quantum_channel_only"


class EveModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["none", "intercept_resend_b92", "intercept_resend_ghz"] = "none"
    target_qubit: int = Field(0, ge=0, le=2)


class SecurityModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    s: int = Field(20, ge=1, le=64)
    n: int = Field(128, ge=1)


class SessionRequestBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rounds: int = Field(..., ge=1, le=2_000_000)
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    noise: NoiseModel = NoiseModel()
    eve: EveModel = EveModel()
    security: SecurityModel = SecurityModel()
    coin_mode: Literal["shared", "two_coin"] = "shared"
    check_tolerance: float = Field(0.25, gt=0.0, lt=1.0)
    min_check_samples: int = Field(16, ge=0)
    qber_threshold: float = Field(DEFAULT_QBER_THRESHOLD, gt=0.0, lt=1.0)
    eve_before_noise: bool = False

    def to_config(self, protocol: str = "combined") -> SessionConfig:
        return SessionConfig(
            total_rounds=self.rounds,
            seed=self.seed,
            noise=NoiseConfig(p=self.noise.p, apply_to=NoiseScope(self.noise.apply_to)),
            eve=EveStrategy(
                kind=EveKind(self.eve.kind), target_qubit=self.eve.target_qubit
            ),
            security=SecurityParams(s=self.security.s, n=self.security.n),
            protocol=SessionMode(protocol),
            coin_mode=CoinMode(self.coin_mode),
            check_tolerance=self.check_tolerance,
            min_check_samples=self.min_check_samples,
            qber_threshold=self.qber_threshold,
            eve_before_noise=self.eve_before_noise,
        )


class SessionRequest(SessionRequestBase):
    protocol: Literal["combined", "ghz", "b92"] = "combined"
    include_round_log: bool = False


class CompareRequest(SessionRequestBase):
    batches: list[int] | None = None

    @model_validator(mode="after")
    def _check_batches(self) -> "CompareRequest":
        if self.batches is not None:
            if not self.batches:
                raise ValueError("batches must be a non-empty list when given")
            for b in self.batches:
                if not 1 <= b <= self.rounds:
                    raise ValueError(
                        f"each batch count must be in [1, rounds], got {b}"
                    )
        return self


class SweepRequest(SessionRequestBase):
    protocol: Literal["combined", "ghz", "b92"] = "combined"
    parameter: Literal["noise", "security_s"]
    start: float
    stop: float
    step: float

    @model_validator(mode="after")
    def _check_grid(self) -> "SweepRequest":
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.start > self.stop:
            raise ValueError(
                f"start must not exceed stop, got {self.start} > {self.stop}"
            )
        if self.parameter == "noise":
            if not (0.0 <= self.start and self.stop <= 1.0):
                raise ValueError("noise sweep bounds must lie in [0, 1]")
        else:
            for name, value in (("start", self.start), ("stop", self.stop), ("step", self.step)):
                if abs(value - round(value)) > GRID_EPS or round(value) < 1:
                    raise ValueError(
                        f"security_s sweep needs positive integer {name}, got {value}"
                    )
        return self

    def grid(self) -> list[float]:
        count = int((self.stop - self.start) / self.step + GRID_EPS) + 1
        return [self.start + k * self.step for k in range(count)]


# -- response models --------------------------------------------------------


class VerdictModel(BaseModel):
    status: Literal["completed", "aborted"]
    reason: str | None


class CountsModel(BaseModel):
    total_rounds: int
    ghz_rounds: int
    b92_rounds: int
    coin_discarded_rounds: int
    ghz_key_rounds: int
    ghz_check_rounds: int
    ghz_discarded_rounds: int
    b92_conclusive_rounds: int


class CombinationStatModel(BaseModel):
    combination: str
    sample_count: int
    mean_product: float | None


class CheckReportModel(BaseModel):
    tolerance: float
    passed: bool
    combinations: list[CombinationStatModel]


class KeysModel(BaseModel):
    ghz_key_bits: str
    b92_alice_bits: str
    b92_bob_bits: str
    b92_source_rounds: list[int]
    combined_key_bits: str


class RatesModel(BaseModel):
    ghz_key_rate: float | None
    b92_sift_rate: float | None
    combined_bits_per_round: float


class AnalyticsModel(BaseModel):
    b92_conclusive_probability_analytic: float
    b92_sift_rate_procedural: float
    ghz_key_round_rate: float
    combined_rate_factor_stated: float
    combined_rate_factor_procedural: float
    entropy_bound_bits: float


class ReportModel(BaseModel):
    schema_version: int
    config: dict
    verdict: VerdictModel
    counts: CountsModel
    fidelity_used: float
    qber: float | None
    ghz_key_agreement: float | None
    check_report: CheckReportModel
    keys: KeysModel
    empirical_rates: RatesModel
    analytics: AnalyticsModel


class RunResponse(BaseModel):
    report: ReportModel
    round_log: list[str] | None = None


class CompareRowModel(BaseModel):
    label: str
    protocol: str
    total_rounds: int
    seed: int
    key_bits: int
    bits_per_round: float
    verdict: str
    abort_reason: str | None


class BatchRowModel(BaseModel):
    batch_index: int
    rounds: int
    key_bits: int
    cumulative_key_bits: int


class BatchTableModel(BaseModel):
    label: str
    num_batches: int
    rows: list[BatchRowModel]


class CompareResponse(BaseModel):
    rows: list[CompareRowModel] | None = None
    batch_tables: list[BatchTableModel] | None = None


class SweepRowModel(BaseModel):
    p: float
    s: int
    ghz_fidelity: float
    b92_fidelity: float
    combined_fidelity: float
    security_ok: bool
    verdict: str
    abort_reason: str | None
    ghz_key_bits: int
    b92_sifted_bits: int
    combined_key_bits: int
    qber: float | None


class SweepResponse(BaseModel):
    parameter: str
    rows: list[SweepRowModel]


class ExpectationModel(BaseModel):
    combination: str
    value: float


class ParadoxResponse(BaseModel):
    expectations: list[ExpectationModel]
    quantum_product: float
    lhv_product: int


class HealthResponse(BaseModel):
    status: str
    name: str
    version: str
    schema_version: int


# -- application ------------------------------------------------------------


def create_app() -> FastAPI:
    app = FastAPI(
        title="hybridqkd",
        version=__version__,
        description=(
            "Simulator for a coin-dispatched hybrid of three-party GHZ and "
            "two-party B92 quantum key distribution."
        ),
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            name="hybridqkd",
            version=__version__,
            schema_version=SCHEMA_VERSION,
        )

    @app.post("/run", response_model=RunResponse)
    def run(request: SessionRequest) -> RunResponse:
        config = _config_or_422(request, request.protocol)
        rounds = simulate_rounds(config)
        report = summarize_rounds(config, rounds)
        round_log = (
            render_round_log(rounds, config) if request.include_round_log else None
        )
        return RunResponse(
            report=ReportModel.model_validate(report_to_dict(report)),
            round_log=round_log,
        )

    @app.post("/compare", response_model=CompareResponse)
    def compare(request: CompareRequest) -> CompareResponse:
        base = _config_or_422(request, "combined")
        if request.batches is not None:
            tables = []
            for num_batches in request.batches:
                rows = batch_key_counts(base, num_batches)
                tables.append(
                    BatchTableModel(
                        label=f"batches-{num_batches}",
                        num_batches=num_batches,
                        rows=[BatchRowModel(**vars(r)) for r in rows],
                    )
                )
            return CompareResponse(batch_tables=tables)
        rows = compare_protocols(standard_comparison(base))
        return CompareResponse(rows=[CompareRowModel(**vars(r)) for r in rows])

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(request: SweepRequest) -> SweepResponse:
        rows = []
        for value in request.grid():
            if request.parameter == "noise":
                request_point = request.model_copy(
                    update={"noise": request.noise.model_copy(update={"p": value})}
                )
            else:
                request_point = request.model_copy(
                    update={
                        "security": request.security.model_copy(
                            update={"s": int(round(value))}
                        )
                    }
                )
            config = _config_or_422(request_point, request.protocol)
            report = summarize_rounds(config, simulate_rounds(config))
            p = config.noise.p
            rows.append(
                SweepRowModel(
                    p=p,
                    s=config.security.s,
                    ghz_fidelity=ghz_fidelity(p),
                    b92_fidelity=b92_fidelity(p),
                    combined_fidelity=combined_fidelity(p),
                    security_ok=security_condition(
                        combined_fidelity(p), config.security
                    ),
                    verdict=report.verdict.status,
                    abort_reason=report.verdict.reason,
                    ghz_key_bits=len(report.ghz_key_bits),
                    b92_sifted_bits=len(report.b92_key),
                    combined_key_bits=len(report.combined_key),
                    qber=report.qber,
                )
            )
        return SweepResponse(parameter=request.parameter, rows=rows)

    @app.get("/paradox", response_model=ParadoxResponse)
    def paradox() -> ParadoxResponse:
        report = ghz_paradox_report()
        return ParadoxResponse(
            expectations=[
                ExpectationModel(combination=c, value=v) for c, v in report.expectations
            ],
            quantum_product=report.quantum_product,
            lhv_product=report.lhv_product,
        )

    return app


def _config_or_422(request: SessionRequestBase, protocol: str) -> SessionConfig:
    try:
        return request.to_config(protocol)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


app = create_app()
