"""Experiment configuration.

Flat UTF-8 ``key=value`` lines with ``#`` comments; dotted keys group
parameters by subsystem. Unknown keys are rejected. The canonical
serialization (sorted keys) feeds the config hash recorded in every
output file, so a run can be reproduced from its own artifacts.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .alignment import AlignmentController
from .errors import ConfigError
from .photonic import (
    REFERENCE_EXCESS_LOSS_DB,
    REFERENCE_LENGTH_KM,
    DetectorParams,
    DistillationParams,
    FibreParams,
    InterferometerParams,
    LinkParams,
    ProtocolParams,
    SourceParams,
)
from .session.runner import SessionConfig

__all__ = ["ExperimentConfig", "parse_config_text", "KEY_DEFAULTS"]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_lengths(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad length list: {text!r}") from exc
    if not values:
        raise ConfigError("length list is empty")
    if any(v <= 0 for v in values):
        raise ConfigError("sweep lengths must be strictly positive")
    if values != sorted(values):
        raise ConfigError("sweep lengths must be sorted ascending")
    return values


# key -> (parser, default-as-string)
KEY_DEFAULTS: dict[str, tuple] = {
    "seed": (str, "0x1"),
    "fibre.length_km": (float, "250"),
    "fibre.attenuation_db_per_km": (float, "0.164"),
    "fibre.excess_loss_db": (str, "auto"),  # float or proportional default
    "source.mu": (float, "0.5"),
    "source.pulse_rate_hz": (float, "625e6"),
    "detector.efficiency": (float, "0.0265"),
    "detector.dark_rate_hz": (float, "5.0"),
    "detector.gate_window_s": (float, "1.6e-9"),
    "detector.dead_time_s": (float, "1e-7"),
    "detector.efficiency_scale": (float, "1.0"),
    "monitor_detector.efficiency": (str, "auto"),  # defaults to data detector
    "monitor_detector.dark_rate_hz": (str, "auto"),
    "interferometer.intrinsic_visibility": (float, "0.95"),
    "interferometer.phase_rad": (float, "0.0"),
    "interferometer.phase_per_wavelength_step": (float, "0.02"),
    "interferometer.drift_std_rad_per_s": (float, "0.01"),
    "protocol.decoy_fraction": (float, "0.1"),
    "protocol.monitor_fraction": (float, "0.1"),
    "protocol.optical_error": (float, "0.008"),
    "distillation.block_size": (int, "32768"),
    "distillation.epsilon_pa": (float, "1e-9"),
    "distillation.reconciliation_efficiency": (float, "1.2"),
    "distillation.eve_bound": (str, "coherence"),
    "session.n_blocks": (int, "3"),
    "session.bootstrap_key_bits": (int, "24000"),
    "session.visibility_policy": (str, "floor"),
    "session.visibility_floor": (float, "0.9"),
    "session.min_monitor_counts": (int, "500"),
    "session.max_block_duration_s": (float, "3600"),
    "session.alignment_lock_s": (float, "60"),
    "sweep.lengths_km": (_parse_lengths, "100,125,150,175,200,225,250"),
    "sweep.slots": (int, "10000000"),
    "sweep.analytic_only": (_parse_bool, "false"),
    "align.scan_range_steps": (int, "800"),
    "align.scan_step": (int, "4"),
    "align.settle_time_s": (float, "0.1"),
    "align.gain": (float, "0.6"),
    "align.probe_steps": (int, "3"),
    "align.noise_duration_s": (float, "10"),
    "align.hold_duration_s": (float, "30"),
    "align.locked_duration_s": (float, "120"),
    "align.lock_bin_s": (float, "1.0"),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse key=value lines; comments and blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class ExperimentConfig:
    values: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_sources(
        cls, file_text: str | None = None, overrides: dict[str, str] | None = None
    ) -> "ExperimentConfig":
        merged: dict[str, str] = {}
        if file_text:
            merged.update(parse_config_text(file_text))
        if overrides:
            merged.update({k: str(v) for k, v in overrides.items()})
        unknown = sorted(set(merged) - set(KEY_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(values=merged)

    def get(self, key: str):
        parser, default = KEY_DEFAULTS[key]
        raw = self.values.get(key, default)
        try:
            return parser(raw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc

    @property
    def seed(self) -> str:
        return self.get("seed")

    def canonical_text(self) -> str:
        """Effective configuration, defaults included, sorted by key."""
        lines = []
        for key in sorted(KEY_DEFAULTS):
            raw = self.values.get(key, KEY_DEFAULTS[key][1])
            lines.append(f"{key}={raw}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]

    # -- typed views ---------------------------------------------------------

    def link(self, length_km: float | None = None) -> LinkParams:
        length = float(length_km if length_km is not None else self.get("fibre.length_km"))
        excess_raw = self.get("fibre.excess_loss_db")
        if excess_raw == "auto":
            excess = REFERENCE_EXCESS_LOSS_DB * (length / REFERENCE_LENGTH_KM)
        else:
            try:
                excess = float(excess_raw)
            except ValueError as exc:
                raise ConfigError(f"bad excess loss: {excess_raw!r}") from exc
        fibre = FibreParams(
            length_km=length,
            attenuation_db_per_km=self.get("fibre.attenuation_db_per_km"),
            excess_loss_db=excess,
        )
        data_det = DetectorParams(
            efficiency=self.get("detector.efficiency"),
            dark_rate_hz=self.get("detector.dark_rate_hz"),
            gate_window_s=self.get("detector.gate_window_s"),
            dead_time_s=self.get("detector.dead_time_s"),
            efficiency_scale=self.get("detector.efficiency_scale"),
        )
        mon_eff = self.get("monitor_detector.efficiency")
        mon_dark = self.get("monitor_detector.dark_rate_hz")
        monitor_det = DetectorParams(
            efficiency=data_det.efficiency if mon_eff == "auto" else float(mon_eff),
            dark_rate_hz=data_det.dark_rate_hz if mon_dark == "auto" else float(mon_dark),
            gate_window_s=data_det.gate_window_s,
            dead_time_s=data_det.dead_time_s,
        )
        return LinkParams(
            fibre=fibre,
            source=SourceParams(
                mu=self.get("source.mu"),
                pulse_rate_hz=self.get("source.pulse_rate_hz"),
            ),
            data_detector=data_det,
            monitor_detector=monitor_det,
            interferometer=InterferometerParams(
                intrinsic_visibility=self.get("interferometer.intrinsic_visibility"),
                phase_rad=self.get("interferometer.phase_rad"),
                phase_per_wavelength_step=self.get(
                    "interferometer.phase_per_wavelength_step"
                ),
                drift_std_rad_per_s=self.get("interferometer.drift_std_rad_per_s"),
            ),
            protocol=ProtocolParams(
                decoy_fraction=self.get("protocol.decoy_fraction"),
                monitor_fraction=self.get("protocol.monitor_fraction"),
                optical_error=self.get("protocol.optical_error"),
            ),
        )

    def distillation(self) -> DistillationParams:
        return DistillationParams(
            block_size=self.get("distillation.block_size"),
            epsilon_pa=self.get("distillation.epsilon_pa"),
            reconciliation_efficiency=self.get("distillation.reconciliation_efficiency"),
            eve_bound=self.get("distillation.eve_bound"),
        )

    def session(self) -> SessionConfig:
        return SessionConfig(
            block_size=self.get("distillation.block_size"),
            n_blocks=self.get("session.n_blocks"),
            epsilon_pa=self.get("distillation.epsilon_pa"),
            eve_bound=self.get("distillation.eve_bound"),
            bootstrap_key_bits=self.get("session.bootstrap_key_bits"),
            visibility_policy=self.get("session.visibility_policy"),
            visibility_floor=self.get("session.visibility_floor"),
            min_monitor_counts=self.get("session.min_monitor_counts"),
            max_block_duration_s=self.get("session.max_block_duration_s"),
            alignment_lock_s=self.get("session.alignment_lock_s"),
        )

    def alignment(self) -> AlignmentController:
        return AlignmentController(
            scan_range_steps=self.get("align.scan_range_steps"),
            scan_step=self.get("align.scan_step"),
            settle_time_s=self.get("align.settle_time_s"),
            gain=self.get("align.gain"),
            probe_steps=self.get("align.probe_steps"),
            noise_duration_s=self.get("align.noise_duration_s"),
            hold_duration_s=self.get("align.hold_duration_s"),
            locked_duration_s=self.get("align.locked_duration_s"),
            lock_bin_s=self.get("align.lock_bin_s"),
        )

    def sweep_lengths(self) -> list[float]:
        return self.get("sweep.lengths_km")
