"""HTTP service wrapping the simulator.

All computation is deterministic in (config, seed); the endpoints are
stateless, so the service can run many clients concurrently.
"""

from __future__ import annotations

import base64

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import KEY_DEFAULTS, ExperimentConfig
from ..errors import CowlinkError, ParameterError
from ..experiments import (
    predict_rows,
    run_align,
    run_session_experiment,
    run_sweep,
)
from .schemas import (
    AlignResponse,
    BlockRecordModel,
    DefaultsResponse,
    ExperimentRequest,
    HealthResponse,
    PredictResponse,
    SessionResponse,
    SweepResponse,
    SweepRowModel,
)

app = FastAPI(
    title="cowlink",
    version=__version__,
    description="Coherent one-way QKD link simulator",
)


def _build_config(request: ExperimentRequest) -> ExperimentConfig:
    overrides = dict(request.config)
    if request.seed is not None:
        overrides["seed"] = request.seed
    try:
        return ExperimentConfig.from_sources(overrides=overrides)
    except CowlinkError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/v1/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/v1/defaults", response_model=DefaultsResponse)
def defaults() -> DefaultsResponse:
    return DefaultsResponse(config={k: v for k, (_, v) in sorted(KEY_DEFAULTS.items())})


@app.post("/v1/predict", response_model=PredictResponse)
def predict(request: ExperimentRequest) -> PredictResponse:
    config = _build_config(request)
    try:
        rows, csv = predict_rows(config)
    except CowlinkError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return PredictResponse(rows=rows, csv=csv, config_hash=config.config_hash())


@app.post("/v1/sweep", response_model=SweepResponse)
def sweep(request: ExperimentRequest) -> SweepResponse:
    config = _build_config(request)
    try:
        rows, csv = run_sweep(config)
    except CowlinkError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return SweepResponse(
        rows=[SweepRowModel(**row.__dict__) for row in rows],
        csv=csv,
        config_hash=config.config_hash(),
    )


@app.post("/v1/align", response_model=AlignResponse)
def align(request: ExperimentRequest) -> AlignResponse:
    config = _build_config(request)
    try:
        trace, csv = run_align(config)
    except CowlinkError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return AlignResponse(
        csv=csv,
        stages=trace.stages_in_order,
        resulting_visibility=trace.resulting_visibility,
        tracking_active=trace.tracking_active,
        config_hash=config.config_hash(),
    )


@app.post("/v1/session", response_model=SessionResponse)
def session(request: ExperimentRequest) -> SessionResponse:
    config = _build_config(request)
    try:
        artifacts = run_session_experiment(config)
    except CowlinkError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    report = artifacts.report
    return SessionResponse(
        report_csv=artifacts.report_csv,
        summary=artifacts.summary,
        transcript_b64=base64.b64encode(artifacts.transcript).decode("ascii"),
        records=[
            BlockRecordModel(
                block_id=r.block_id,
                n_sifted=r.n_sifted,
                qber=r.qber,
                leaked_bits=r.leaked_bits,
                visibility=r.visibility,
                visibility_reliable=r.visibility_reliable,
                secret_len=r.secret_len,
                sim_time_s=r.sim_time_s,
                confirmed=r.confirmed,
            )
            for r in report.records
        ],
        avg_secret_rate_hz=report.avg_secret_rate_hz,
        steady_secret_rate_hz=report.steady_secret_rate_hz,
        avg_qber=report.avg_qber,
        aborted=artifacts.aborted,
        abort_reason=artifacts.abort_reason,
        config_hash=config.config_hash(),
    )
