"""Experiment drivers behind the service endpoints and the CLI.

Each driver returns plain data plus ready-to-write CSV text. Every CSV
starts with a comment line recording the seed and the effective config
hash, so outputs are self-describing and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alignment import simulate_alignment
from .config import ExperimentConfig
from .distillation.entropy import binary_entropy, compute_secret_length, resolve_eve_bound
from .photonic import LinkParams, analytic_rates, data_line_stats, expected_qber
from .photonic import visibility as fringe_visibility
from .protocol import bob_decode, estimate_visibility, generate_frame, sift, simulate_transmission
from .randomness import BitSource
from .session import run_session

__all__ = [
    "predict_rows",
    "run_sweep",
    "run_align",
    "run_session_experiment",
    "SweepRow",
    "SessionArtifacts",
]

_MC_CHUNK_SLOTS = 5_000_000

SWEEP_COLUMNS = [
    "length_km",
    "total_loss_db",
    "analytic_qber",
    "analytic_secret_rate_hz",
    "simulated_qber",
    "simulated_secret_rate_hz",
    "visibility",
]


def _header(config: ExperimentConfig) -> str:
    return f"# seed={config.seed} config_sha256={config.config_hash()}\n"


@dataclass
class SweepRow:
    length_km: float
    total_loss_db: float
    analytic_qber: float
    analytic_secret_rate_hz: float
    simulated_qber: float | None
    simulated_secret_rate_hz: float | None
    visibility: float | None

    def as_csv(self) -> str:
        def fmt(v) -> str:
            return "" if v is None else f"{v:.8g}"

        return ",".join(
            [
                f"{self.length_km:.8g}",
                f"{self.total_loss_db:.8g}",
                f"{self.analytic_qber:.8g}",
                f"{self.analytic_secret_rate_hz:.8g}",
                fmt(self.simulated_qber),
                fmt(self.simulated_secret_rate_hz),
                fmt(self.visibility),
            ]
        )


def predict_rows(config: ExperimentConfig) -> tuple[list[dict], str]:
    """Analytic rate prediction for the configured link (single row)."""
    link = config.link()
    pred = analytic_rates(link, config.distillation())
    row = {
        "length_km": link.fibre.length_km,
        "total_loss_db": pred.total_loss_db,
        "transmittance": pred.transmittance,
        "p_signal": pred.p_signal,
        "p_dark": pred.p_dark,
        "sifted_rate_hz": pred.sifted_rate_hz,
        "qber": pred.qber,
        "expected_visibility": pred.expected_visibility,
        "secret_fraction": pred.secret_fraction,
        "secret_rate_hz": pred.secret_rate_hz,
    }
    csv = _header(config)
    csv += ",".join(row.keys()) + "\n"
    csv += ",".join(f"{v:.8g}" for v in row.values()) + "\n"
    return [row], csv


def _simulate_point(
    link: LinkParams, config: ExperimentConfig, source: BitSource, total_slots: int
) -> tuple[float, float, float]:
    """Chunked slot-exact Monte Carlo: (qber, secret_rate_hz, visibility)."""
    sifted = 0
    errors = 0
    dest = 0
    con = 0
    remaining = total_slots
    while remaining > 0:
        n = min(_MC_CHUNK_SLOTS, remaining)
        remaining -= n
        frame = generate_frame(source, n, link.protocol.decoy_fraction)
        record = simulate_transmission(frame, link, source)
        block = sift(frame, bob_decode(record), record)
        sifted += block.n_bits
        errors += int(np.count_nonzero(block.alice_bits != block.bob_bits))
        dest += block.coherence.destructive
        con += block.coherence.constructive

    qber = errors / sifted if sifted else float("nan")
    vis = fringe_visibility(con, dest) if con > 0 and con >= dest else 0.0
    duration = total_slots / link.source.bit_rate_hz
    sifted_rate = sifted / duration if duration > 0 else 0.0
    dist = config.distillation()
    if sifted and not np.isnan(qber):
        leak = dist.reconciliation_efficiency * dist.block_size * binary_entropy(
            min(qber, 0.5)
        )
        m = compute_secret_length(
            dist.block_size,
            leaked_bits=leak,
            visibility=vis,
            epsilon_pa=dist.epsilon_pa,
            eve_bound=resolve_eve_bound(dist.eve_bound),
        )
        secret_rate = sifted_rate * (m / dist.block_size)
    else:
        secret_rate = 0.0
    return qber, secret_rate, vis


def run_sweep(config: ExperimentConfig) -> tuple[list[SweepRow], str]:
    """One row per fibre length; simulated columns unless analytic-only.

    Rows are independent: each length forks its own stream by label, so
    row results do not depend on evaluation order.
    """
    lengths = config.sweep_lengths()
    analytic_only = config.get("sweep.analytic_only")
    slots = config.get("sweep.slots")
    master = BitSource(config.seed)
    dist = config.distillation()

    rows: list[SweepRow] = []
    for length in lengths:
        link = config.link(length_km=length)
        pred = analytic_rates(link, dist)
        if analytic_only:
            rows.append(
                SweepRow(
                    length_km=length,
                    total_loss_db=pred.total_loss_db,
                    analytic_qber=pred.qber,
                    analytic_secret_rate_hz=pred.secret_rate_hz,
                    simulated_qber=None,
                    simulated_secret_rate_hz=None,
                    visibility=None,
                )
            )
            continue
        source = master.fork(f"sweep/{length:g}")
        qber, secret_rate, vis = _simulate_point(link, config, source, slots)
        rows.append(
            SweepRow(
                length_km=length,
                total_loss_db=pred.total_loss_db,
                analytic_qber=pred.qber,
                analytic_secret_rate_hz=pred.secret_rate_hz,
                simulated_qber=qber,
                simulated_secret_rate_hz=secret_rate,
                visibility=vis,
            )
        )

    csv = _header(config) + ",".join(SWEEP_COLUMNS) + "\n"
    csv += "".join(row.as_csv() + "\n" for row in rows)
    return rows, csv


def run_align(config: ExperimentConfig):
    """Alignment trace for the configured link."""
    trace = simulate_alignment(
        config.link(), config.alignment(), BitSource(config.seed)
    )
    csv = _header(config) + trace.to_csv()
    return trace, csv


@dataclass
class SessionArtifacts:
    report: object
    report_csv: str
    transcript: bytes
    summary: str
    aborted: bool = False
    abort_reason: str | None = None


def run_session_experiment(config: ExperimentConfig) -> SessionArtifacts:
    report = run_session(config.link(), config.session(), seed=config.seed)
    csv = _header(config) + report.to_csv()
    return SessionArtifacts(
        report=report,
        report_csv=csv,
        transcript=report.transcript_bytes(),
        summary=report.summary(),
        aborted=report.abort_reason is not None,
        abort_reason=report.abort_reason,
    )
