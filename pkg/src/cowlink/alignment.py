"""Interferometer auto-alignment on the monitor line.

Reproduces the four-stage start-up procedure of the link: a dark noise
measurement, a laser-wavelength scan tracing interference fringes, a
hold at the fringe maximum to fix the visibility reference, and a lock
onto the fringe minimum that a dithered proportional controller defends
against phase drift for the rest of the run.

Alignment runs on a training sequence with every pulse non-empty, so
each interferometer output slot interferes and the destructive-port
rate is C + A·(1 − V·cos φ) with C the dark rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .photonic import LinkParams, monitor_base_prob, monitor_click_prob
from .photonic import visibility as fringe_visibility
from .randomness import BitSource

__all__ = ["AlignmentController", "AlignmentSample", "AlignmentTrace", "simulate_alignment"]

STAGE_NOISE = "noise"
STAGE_SCAN = "scan"
STAGE_HOLD_MAX = "hold_max"
STAGE_LOCKED_MIN = "locked_min"
STAGES = (STAGE_NOISE, STAGE_SCAN, STAGE_HOLD_MAX, STAGE_LOCKED_MIN)


@dataclass(frozen=True)
class AlignmentController:
    scan_range_steps: int = 800  # swept symmetrically around zero
    scan_step: int = 4
    settle_time_s: float = 0.1
    gain: float = 0.6
    probe_steps: int = 3  # dither amplitude during the lock
    noise_duration_s: float = 10.0
    hold_duration_s: float = 30.0
    locked_duration_s: float = 120.0
    lock_bin_s: float = 1.0
    visibility_window_bins: int = 10
    # Scan dwell stretches until a sample at the fringe maximum is
    # expected to hold about this many counts (bounded below by
    # settle_time_s and above by max_settle_s).
    target_scan_counts: float = 200.0
    max_settle_s: float = 10.0
    # Corrections below this significance are ignored, and a single
    # correction never moves the phase by more than the clamp.
    deadband_sigmas: float = 1.0
    max_correction_rad: float = 0.3

    def __post_init__(self):
        if self.scan_range_steps <= 0 or self.scan_step <= 0:
            raise ParameterError("scan range and step must be positive")
        if self.settle_time_s <= 0 or self.lock_bin_s <= 0:
            raise ParameterError("dwell times must be positive")
        if not 0 < self.gain <= 2:
            raise ParameterError("gain must be in (0, 2]")
        if self.probe_steps < 1:
            raise ParameterError("probe amplitude must be >= 1 step")


@dataclass(frozen=True)
class AlignmentSample:
    time_s: float
    stage: str
    laser_offset_step: int
    count_rate_hz: float


@dataclass
class AlignmentTrace:
    samples: list[AlignmentSample] = field(default_factory=list)
    resulting_visibility: float = 0.0
    max_reference_rate_hz: float = 0.0
    locked_phase_residual_rad: float = 0.0
    tracking_active: bool = True
    visibility_times_s: np.ndarray = field(default_factory=lambda: np.zeros(0))
    visibility_series: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def stages_in_order(self) -> list[str]:
        seen: list[str] = []
        for s in self.samples:
            if not seen or seen[-1] != s.stage:
                seen.append(s.stage)
        return seen

    def stage_samples(self, stage: str) -> list[AlignmentSample]:
        return [s for s in self.samples if s.stage == stage]

    def to_csv(self) -> str:
        lines = ["time_s,stage,laser_offset_step,count_rate_hz"]
        for s in self.samples:
            lines.append(
                f"{s.time_s:.6f},{s.stage},{s.laser_offset_step},{s.count_rate_hz:.6f}"
            )
        return "\n".join(lines) + "\n"


class _MonitorBench:
    """Rate model plus Poisson sampling for the training sequence."""

    def __init__(self, link: LinkParams, source: BitSource):
        self.link = link
        self.source = source
        self.pair_rate_hz = link.source.pulse_rate_hz
        self.p0 = monitor_base_prob(link)
        self.dark_rate_hz = (
            link.monitor_detector.dark_prob_per_gate * self.pair_rate_hz
        )
        self.v = link.interferometer.intrinsic_visibility
        self.phase0 = link.interferometer.phase_rad
        self.per_step = link.interferometer.phase_per_wavelength_step
        self.drift_std = link.interferometer.drift_std_rad_per_s
        self.drift_rad = 0.0

    def phase(self, offset_steps: int) -> float:
        return self.phase0 + offset_steps * self.per_step + self.drift_rad

    def rate_hz(self, offset_steps: int) -> float:
        p = monitor_click_prob(self.phase(offset_steps), self.v, self.p0)
        return self.pair_rate_hz * p + self.dark_rate_hz

    def counts(self, offset_steps: int, duration_s: float) -> int:
        return self.source.poisson(self.rate_hz(offset_steps) * duration_s)

    def advance_drift(self, dt_s: float) -> None:
        if self.drift_std > 0:
            step = self.drift_std * math.sqrt(dt_s) * float(self.source.normal(1)[0])
            self.drift_rad += step


def simulate_alignment(
    link: LinkParams,
    controller: AlignmentController | None = None,
    source: BitSource | None = None,
) -> AlignmentTrace:
    """Run the four alignment stages and return the labelled trace."""
    controller = controller or AlignmentController()
    source = source or BitSource(0)
    span_rad = controller.scan_range_steps * link.interferometer.phase_per_wavelength_step
    if span_rad < 2 * math.pi:
        raise ParameterError(
            f"scan range covers {span_rad:.2f} rad; need at least 2*pi"
        )

    bench = _MonitorBench(link, source.fork("alignment"))
    trace = AlignmentTrace()
    t = 0.0

    # (i) dark-noise measurement: the transmitter is blocked.
    n_bins = max(1, int(round(controller.noise_duration_s / controller.lock_bin_s)))
    for _ in range(n_bins):
        c = bench.source.poisson(bench.dark_rate_hz * controller.lock_bin_s)
        bench.advance_drift(controller.lock_bin_s)
        t += controller.lock_bin_s
        trace.samples.append(
            AlignmentSample(t, STAGE_NOISE, 0, c / controller.lock_bin_s)
        )

    # (ii) wavelength scan across the fringe pattern. A short rate probe
    # first sets the dwell so faint links still trace usable fringes.
    half = controller.scan_range_steps // 2
    probe_rate = 0.0
    for off in (-half, 0, half):
        c = bench.counts(off, 1.0)
        bench.advance_drift(1.0)
        t += 1.0
        probe_rate = max(probe_rate, float(c))
        trace.samples.append(AlignmentSample(t, STAGE_SCAN, off, float(c)))
    dwell = min(
        max(controller.settle_time_s, controller.target_scan_counts / max(probe_rate, 0.5)),
        controller.max_settle_s,
    )

    offsets = list(range(-half, half + 1, controller.scan_step))
    scan_rates: list[float] = []
    for off in offsets:
        c = bench.counts(off, dwell)
        bench.advance_drift(dwell)
        t += dwell
        rate = c / dwell
        scan_rates.append(rate)
        trace.samples.append(AlignmentSample(t, STAGE_SCAN, off, rate))

    # Three-sample smoothing before picking the extrema tames Poisson
    # noise; only the fully-covered interior is eligible.
    rates = np.array(scan_rates)
    if rates.size >= 3:
        smooth = np.convolve(rates, np.ones(3) / 3.0, mode="valid")
        max_offset = offsets[int(np.argmax(smooth)) + 1]
        min_offset = offsets[int(np.argmin(smooth)) + 1]
    else:
        smooth = rates
        max_offset = offsets[int(np.argmax(smooth))]
        min_offset = offsets[int(np.argmin(smooth))]
    fringe_amplitude = max(float(smooth.max() - smooth.min()), 1.0)  # ~2AV

    # (iii) hold at the constructive maximum: visibility reference.
    n_bins = max(1, int(round(controller.hold_duration_s / controller.lock_bin_s)))
    hold_counts = 0
    for _ in range(n_bins):
        c = bench.counts(max_offset, controller.lock_bin_s)
        hold_counts += c
        bench.advance_drift(controller.lock_bin_s)
        t += controller.lock_bin_s
        trace.samples.append(
            AlignmentSample(t, STAGE_HOLD_MAX, max_offset, c / controller.lock_bin_s)
        )
    max_ref = hold_counts / (n_bins * controller.lock_bin_s)
    trace.max_reference_rate_hz = max_ref

    # (iv) lock to the destructive minimum with a dithered P-controller.
    # Each bin: half the time measuring at the nominal offset (recorded),
    # a quarter at each probe point for the gradient signal.
    offset = min_offset
    probe = controller.probe_steps
    sin_probe = math.sin(probe * bench.per_step)
    n_bins = max(1, int(round(controller.locked_duration_s / controller.lock_bin_s)))
    locked_rates = []
    half_bin = controller.lock_bin_s / 2.0
    quarter_bin = controller.lock_bin_s / 4.0

    # Feedback is only worth running if a modest phase error (0.1 rad)
    # produces a probe imbalance comparable to the counting noise at the
    # minimum; otherwise hold the scan minimum open-loop.
    expected_signal = fringe_amplitude * math.sin(0.1) * sin_probe * quarter_bin
    noise_floor = math.sqrt(2.0 * max(float(smooth.min()), 0.0) * quarter_bin + 1.0)
    tracking = expected_signal > 0.5 * noise_floor
    trace.tracking_active = tracking

    for _ in range(n_bins):
        c_center = bench.counts(offset, half_bin)
        bench.advance_drift(half_bin)
        c_minus = bench.counts(offset - probe, quarter_bin)
        bench.advance_drift(quarter_bin)
        c_plus = bench.counts(offset + probe, quarter_bin)
        bench.advance_drift(quarter_bin)
        t += controller.lock_bin_s
        rate = c_center / half_bin
        locked_rates.append(rate)
        trace.samples.append(AlignmentSample(t, STAGE_LOCKED_MIN, offset, rate))

        # rate(d +/- p) differ by fringe_amplitude * sin(d) * sin(p).
        # Correct only on a statistically significant imbalance, and
        # never jump farther than the clamp in one step.
        if not tracking:
            continue
        if abs(c_plus - c_minus) <= controller.deadband_sigmas * math.sqrt(
            c_plus + c_minus + 1.0
        ):
            continue
        diff_rate = (c_plus - c_minus) / quarter_bin
        sin_delta = diff_rate / (fringe_amplitude * sin_probe)
        delta_est = math.asin(max(-1.0, min(1.0, sin_delta)))
        delta_est = max(
            -controller.max_correction_rad,
            min(controller.max_correction_rad, delta_est),
        )
        correction = -round(controller.gain * delta_est / bench.per_step)
        offset += int(np.clip(correction, -half, half))

    locked = np.array(locked_rates)
    window = max(1, controller.visibility_window_bins)
    kernel = np.ones(window) / window
    smoothed = np.convolve(locked, kernel, mode="valid")
    vis_series = np.array(
        [fringe_visibility(max_ref, min(r, max_ref)) for r in smoothed]
    )
    times = np.array(
        [s.time_s for s in trace.samples if s.stage == STAGE_LOCKED_MIN][window - 1 :]
    )
    trace.visibility_times_s = times
    trace.visibility_series = vis_series
    mean_locked = float(locked.mean()) if locked.size else 0.0
    trace.resulting_visibility = (
        fringe_visibility(max_ref, min(mean_locked, max_ref)) if max_ref > 0 else 0.0
    )
    trace.locked_phase_residual_rad = bench.phase(offset) % (2 * math.pi)
    if trace.locked_phase_residual_rad > math.pi:
        trace.locked_phase_residual_rad -= 2 * math.pi
    return trace
