"""Request and response models for the simulation service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ExperimentRequest(BaseModel):
    """Flat config entries, same keys and value syntax as the config file."""

    config: dict[str, str] = Field(default_factory=dict)
    seed: str | None = None  # convenience override for config["seed"]


class PredictResponse(BaseModel):
    rows: list[dict]
    csv: str
    config_hash: str


class SweepRowModel(BaseModel):
    length_km: float
    total_loss_db: float
    analytic_qber: float
    analytic_secret_rate_hz: float
    simulated_qber: float | None = None
    simulated_secret_rate_hz: float | None = None
    visibility: float | None = None


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]
    csv: str
    config_hash: str


class AlignResponse(BaseModel):
    csv: str
    stages: list[str]
    resulting_visibility: float
    tracking_active: bool
    config_hash: str


class BlockRecordModel(BaseModel):
    block_id: int
    n_sifted: int
    qber: float
    leaked_bits: int
    visibility: float
    visibility_reliable: bool
    secret_len: int
    sim_time_s: float
    confirmed: bool


class SessionResponse(BaseModel):
    report_csv: str
    summary: str
    transcript_b64: str
    records: list[BlockRecordModel]
    avg_secret_rate_hz: float
    steady_secret_rate_hz: float
    avg_qber: float
    aborted: bool
    abort_reason: str | None = None
    config_hash: str


class HealthResponse(BaseModel):
    status: str
    version: str


class DefaultsResponse(BaseModel):
    config: dict[str, str]
