"""Quantum phase of the coherent one-way exchange.

Alice emits pairs of pulse half-slots: a data slot puts the non-empty
pulse in the first half for bit 0 and the second half for bit 1; a
decoy slot fills both halves. Bob detects on the data line slot by
slot, and a one-pulse-delay interferometer on the tapped monitor line
measures coherence between adjacent non-empty pulses.

The Monte Carlo here is slot-exact but samples rare processes (dark
counts, extinction leakage, monitor clicks) by count-and-position
rather than per-slot coin flips, so 10^7-slot frames run in seconds.
Interference is evaluated within one frame; callers chunk long runs at
frame granularity (the lost cross-chunk pulse pair is one in 2·10^7).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientStatisticsError,
    ParameterError,
    ProtocolViolationError,
)
from .photonic import (
    LinkParams,
    click_probabilities,
    monitor_base_prob,
    monitor_click_prob,
)
from .photonic import visibility as fringe_visibility
from .randomness import BitSource

__all__ = [
    "KIND_DATA0",
    "KIND_DATA1",
    "KIND_DECOY",
    "FrameSchedule",
    "DetectionRecord",
    "Announcements",
    "CoherenceStats",
    "SiftedBlock",
    "VisibilityEstimate",
    "generate_frame",
    "simulate_transmission",
    "bob_decode",
    "sift",
    "estimate_visibility",
]

KIND_DATA0 = 0
KIND_DATA1 = 1
KIND_DECOY = 2

# Interference output slot k mixes pulses k-1 and k; a lone non-empty
# pulse leaks a quarter of its direct click probability into each of
# its two output slots per port (half amplitude at the combiner).
LONE_PULSE_PORT_FRACTION = 0.25

DEFAULT_MIN_MONITOR_COUNTS = 500


@dataclass
class FrameSchedule:
    """Alice's transmitted sequence, one kind tag per bit slot."""

    kinds: np.ndarray  # uint8: KIND_DATA0 / KIND_DATA1 / KIND_DECOY

    def __post_init__(self):
        self.kinds = np.ascontiguousarray(self.kinds, dtype=np.uint8)
        if self.kinds.ndim != 1:
            raise ParameterError("frame kinds must be one-dimensional")

    @property
    def n_slots(self) -> int:
        return int(self.kinds.size)

    @property
    def decoy_count(self) -> int:
        return int(np.count_nonzero(self.kinds == KIND_DECOY))

    def pulse_pattern(self) -> np.ndarray:
        """Per half-slot occupancy (1 = non-empty), length 2·n_slots."""
        pattern = np.zeros(2 * self.n_slots, dtype=np.uint8)
        pattern[0::2] = (self.kinds == KIND_DATA0) | (self.kinds == KIND_DECOY)
        pattern[1::2] = (self.kinds == KIND_DATA1) | (self.kinds == KIND_DECOY)
        return pattern

    def pair_kinds(self) -> np.ndarray:
        """Occupancy class of each interferometer output slot.

        Entry k (k = 1..2n-1) classifies the pulse pair (k-1, k):
        2 = both non-empty (interference), 1 = exactly one, 0 = none.
        Output slot 0 has no predecessor and is excluded.
        """
        ne = self.pulse_pattern()
        return (ne[:-1] + ne[1:]).astype(np.uint8)


@dataclass
class DetectionRecord:
    """Bob's clicks for one frame, all index arrays sorted."""

    n_slots: int
    data_slots: np.ndarray  # slots with exactly one data-line click
    data_halves: np.ndarray  # 0 = first half, 1 = second half
    double_click_slots: np.ndarray  # discarded slots
    monitor_dest: np.ndarray  # output-slot indices, destructive port
    monitor_con: np.ndarray  # output-slot indices, constructive port
    routed_to_monitor: np.ndarray  # non-empty pulse indices diverted from data

    @property
    def click_count(self) -> int:
        return int(self.data_slots.size)


@dataclass
class Announcements:
    """Bob's detection announcement: slots are public, bits stay private."""

    slots: np.ndarray
    bits: np.ndarray  # Bob-private: half position mapped to bit value

    def __len__(self) -> int:
        return int(self.slots.size)


@dataclass
class CoherenceStats:
    """Monitor counts restricted to both-non-empty pulse pairs."""

    interference_pairs: int = 0
    destructive: int = 0
    constructive: int = 0


@dataclass
class SiftedBlock:
    alice_bits: np.ndarray
    bob_bits: np.ndarray
    slot_indices: np.ndarray
    decoy_detection_count: int
    coherence: CoherenceStats = field(default_factory=CoherenceStats)

    def __post_init__(self):
        if self.alice_bits.size != self.bob_bits.size:
            raise ParameterError("sifted key halves must have equal length")

    @property
    def n_bits(self) -> int:
        return int(self.alice_bits.size)


@dataclass
class VisibilityEstimate:
    value: float
    destructive_counts: int
    constructive_counts: int
    reliable: bool


def generate_frame(source: BitSource, n_slots: int, decoy_fraction: float) -> FrameSchedule:
    """Draw a frame: each slot is a decoy with probability
    ``decoy_fraction``, otherwise a uniform data bit."""
    if n_slots <= 0:
        raise ParameterError("frame needs at least one slot")
    decoy = source.bernoulli_array(decoy_fraction, n_slots)
    bits = source.next_bits(n_slots)
    kinds = np.where(decoy, np.uint8(KIND_DECOY), bits.astype(np.uint8))
    return FrameSchedule(kinds=kinds)


def _sparse_hits(source: BitSource, population: int, p: float) -> np.ndarray:
    """Positions of Bernoulli(p) successes over a huge sparse population.

    Draws the count, then uniform positions; duplicate positions merge,
    matching the click-or-no-click semantics of a detector gate.
    """
    if population <= 0 or p <= 0.0:
        return np.zeros(0, dtype=np.int64)
    k = source.binomial(population, p)
    if k == 0:
        return np.zeros(0, dtype=np.int64)
    return np.unique(source.index_sample(population, k))


def simulate_transmission(
    frame: FrameSchedule, link: LinkParams, source: BitSource
) -> DetectionRecord:
    """One frame through the link: routing, clicks, darks, interference.

    Data line: each non-empty pulse is diverted to the monitor with
    probability ``monitor_fraction`` (no photon click on the data line
    then); surviving non-empty pulses click with p_signal, empty halves
    with e_opt·p_signal, and every gated half-slot may dark-click.
    Slots with both halves clicking are discarded.

    Monitor line: the tap is passive, so every adjacent non-empty pulse
    pair interferes with base probability set by the tapped intensity;
    pairs with a single non-empty pulse contribute quarter-strength
    leakage per port, and monitor dark counts hit every output slot.
    """
    n = frame.n_slots
    two_n = 2 * n
    p_signal, p_dark = click_probabilities(link)
    e_opt = link.protocol.optical_error
    t_b = link.protocol.monitor_fraction

    ne = frame.pulse_pattern()
    ne_idx = np.nonzero(ne)[0]

    # Routing and direct signal clicks on the non-empty pulses.
    routed_mask = source.bernoulli_array(t_b, ne_idx.size)
    if p_signal >= 0.05:
        hit = source.uniform(ne_idx.size) < p_signal
        signal_clicks = ne_idx[~routed_mask & hit]
    else:
        survivors = ne_idx[~routed_mask]
        signal_clicks = survivors[_sparse_hits(source, survivors.size, p_signal)]
    routed_pulses = ne_idx[routed_mask]

    # Extinction leakage into empty halves (already routing-thinned).
    empty_idx = np.nonzero(ne == 0)[0]
    leak_positions = _sparse_hits(source, empty_idx.size, (1.0 - t_b) * e_opt * p_signal)
    leak_clicks = empty_idx[leak_positions]

    # Dark counts on every gated half-slot.
    dark_clicks = _sparse_hits(source, two_n, p_dark)

    clicked = np.unique(np.concatenate([signal_clicks, leak_clicks, dark_clicks]))
    slots = clicked // 2
    uniq_slots, counts = np.unique(slots, return_counts=True)
    single = uniq_slots[counts == 1]
    doubles = uniq_slots[counts >= 2]
    # clicked is sorted, so single-click pulses align with sorted slots.
    halves = np.zeros(single.size, dtype=np.uint8)
    if single.size:
        single_mask = np.isin(slots, single)
        halves = (clicked[single_mask] & 1).astype(np.uint8)

    dest, con = _monitor_clicks(frame, link, source)

    return DetectionRecord(
        n_slots=n,
        data_slots=single,
        data_halves=halves,
        double_click_slots=doubles,
        monitor_dest=dest,
        monitor_con=con,
        routed_to_monitor=routed_pulses,
    )


def _monitor_clicks(
    frame: FrameSchedule, link: LinkParams, source: BitSource
) -> tuple[np.ndarray, np.ndarray]:
    pair = frame.pair_kinds()  # length 2n-1, classifies output slots 1..2n-1
    p0 = monitor_base_prob(link)
    p_dark = link.monitor_detector.dark_prob_per_gate
    v = link.interferometer.intrinsic_visibility
    phase = link.interferometer.phase_rad

    p_dest_int = monitor_click_prob(phase, v, p0)
    p_con_int = p0 - p_dest_int
    p_lone = p0 * LONE_PULSE_PORT_FRACTION

    both = np.nonzero(pair == 2)[0]
    lone = np.nonzero(pair == 1)[0]
    none = np.nonzero(pair == 0)[0]

    def port(p_int: float) -> np.ndarray:
        hits = [
            both[_sparse_hits(source, both.size, _with_dark(p_int, p_dark))],
            lone[_sparse_hits(source, lone.size, _with_dark(p_lone, p_dark))],
            none[_sparse_hits(source, none.size, p_dark)],
        ]
        # pair_kinds()[k] describes output slot k+1
        return np.unique(np.concatenate(hits)) + 1

    return port(p_dest_int), port(p_con_int)


def _with_dark(p_click: float, p_dark: float) -> float:
    return 1.0 - (1.0 - p_click) * (1.0 - p_dark)


def bob_decode(record: DetectionRecord) -> Announcements:
    """One announcement per surviving data click, in slot order.

    The detected half encodes Bob's private bit (first half = 0); only
    the slot indices are ever disclosed.
    """
    return Announcements(
        slots=record.data_slots.astype(np.int64),
        bits=record.data_halves.astype(np.uint8),
    )


def sift(
    frame: FrameSchedule,
    announcements: Announcements,
    record: DetectionRecord | None = None,
) -> SiftedBlock:
    """Drop announced decoy slots; pair Alice's and Bob's data bits.

    ``record`` (when available) fills the coherence statistics used for
    visibility estimation alongside the key bits.
    """
    slots = announcements.slots
    if slots.size and (slots.min() < 0 or slots.max() >= frame.n_slots):
        raise ProtocolViolationError("announcement outside frame bounds")
    kinds = frame.kinds[slots]
    keep = kinds != KIND_DECOY
    coherence = CoherenceStats()
    if record is not None:
        pair = frame.pair_kinds()
        interference = np.nonzero(pair == 2)[0] + 1
        coherence.interference_pairs = int(interference.size)
        coherence.destructive = int(np.isin(record.monitor_dest, interference).sum())
        coherence.constructive = int(np.isin(record.monitor_con, interference).sum())
    return SiftedBlock(
        alice_bits=kinds[keep].astype(np.uint8),
        bob_bits=announcements.bits[keep].astype(np.uint8),
        slot_indices=slots[keep],
        decoy_detection_count=int(np.count_nonzero(~keep)),
        coherence=coherence,
    )


def estimate_visibility(
    record: DetectionRecord,
    frame: FrameSchedule,
    link: LinkParams,
    min_counts: int = DEFAULT_MIN_MONITOR_COUNTS,
) -> VisibilityEstimate:
    """Two-port visibility over interference output slots.

    At phase lock the constructive port sits at the fringe maximum and
    the destructive port at the minimum, so their count ratio feeds the
    standard (max-min)/(max+min) estimator. Below ``min_counts`` total
    clicks the estimate is flagged unreliable; zero clicks raise.
    """
    pair = frame.pair_kinds()
    interference = np.nonzero(pair == 2)[0] + 1
    dest = int(np.isin(record.monitor_dest, interference).sum())
    con = int(np.isin(record.monitor_con, interference).sum())
    total = dest + con
    if total == 0:
        raise InsufficientStatisticsError("no monitor counts in interference slots")
    value = fringe_visibility(con, dest) if con >= dest else 0.0
    return VisibilityEstimate(
        value=value,
        destructive_counts=dest,
        constructive_counts=con,
        reliable=total >= min_counts,
    )
