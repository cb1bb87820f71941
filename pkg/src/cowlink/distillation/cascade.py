"""Interactive parity-exchange error correction (Cascade).

One party holds the reference key; the other runs the corrector below
against a :class:`ParityOracle` that answers parity queries over agreed
index sets. Queries are batched per round so an interactive channel
pays one round trip per bisection level, not one per block.

Structure per reconciliation:

  * ``num_passes`` passes over the key. Pass 1 partitions the key in
    natural order into blocks sized from the error-rate estimate; later
    passes reshuffle (seeded) and double the block size.
  * Blocks whose parities disagree are bisected to a single error,
    which is flipped. Every flip toggles the parity of the containing
    block in every other pass; newly odd blocks are corrected too
    (full backtracking), smallest blocks first.
  * A deterministic verification sweep closes the run: parities of the
    index-bit slices {i : bit b of i is 1} plus the full key. Any two
    residual errors differ in some index bit, so the sweep always
    exposes (and repairs) one- and two-error residues that shuffled
    doubling can miss on short keys.

Both sides address key bits through shared *query spaces*: one space
per pass permutation, one per sweep slice, and one for the raw key
order. A parity query is a half-open sub-range of a space, so the whole
conversation serializes as (space, lo, hi) triples. All disclosed
parity bits are counted and recorded in a transcript of
{pass, block, parity} rows; ``leaked_bits`` equals the transcript
length exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from ..errors import ParameterError, ResidualErrorsError
from ..randomness import BitSource

__all__ = [
    "CascadeConfig",
    "CascadeResult",
    "ParityQuery",
    "ParityRecord",
    "ParityOracle",
    "QuerySpaces",
    "RangeParityBackend",
    "LocalParityOracle",
    "pass_permutations",
    "default_initial_block",
    "cascade_reconcile",
    "reconcile_pair",
    "SWEEP_BASE",
    "RAW_SPACE",
]

# Query spaces >= SWEEP_BASE address sweep slices; RAW_SPACE is the key
# in natural order (used for full-key parity and its bisections).
SWEEP_BASE = 0x100
RAW_SPACE = 0xFFFF

_MAX_CORRECTIONS_FACTOR = 4
_MAX_SWEEP_ROUNDS = 64


def default_initial_block(qber_estimate: float) -> int:
    """First-pass block size: ceil(0.73 / Q), floored at Q = 0.1%."""
    return math.ceil(0.73 / max(qber_estimate, 0.001))


@dataclass(frozen=True)
class CascadeConfig:
    num_passes: int = 4
    initial_block_fn: Callable[[float], int] = default_initial_block
    min_block: int = 8
    verify_sweep: bool = True

    def __post_init__(self):
        if self.num_passes < 1:
            raise ParameterError("cascade needs at least one pass")
        if self.min_block < 2:
            raise ParameterError("minimum block size is 2")

    def block_sizes(self, n: int, qber_estimate: float) -> list[int]:
        """Per-pass block sizes: doubling, clamped so >= 2 blocks exist."""
        upper = max(2, n // 2)
        k1 = min(max(self.initial_block_fn(qber_estimate), self.min_block), upper)
        return [min(k1 * (2**p), upper) for p in range(self.num_passes)]


@dataclass(frozen=True)
class ParityQuery:
    """Ask for the parity of space[lo:hi] of the peer's key."""

    space: int
    lo: int
    hi: int


@dataclass(frozen=True)
class ParityRecord:
    pass_label: str
    block: str
    parity: int

    def to_dict(self) -> dict:
        return {"pass": self.pass_label, "block": self.block, "parity": self.parity}


@dataclass
class CascadeResult:
    corrected_key: np.ndarray
    leaked_bits: int
    parity_messages: int
    corrections: list[int]
    transcript: list[ParityRecord]


class ParityOracle(Protocol):
    def parities(self, queries: Sequence[ParityQuery]) -> list[int]:
        """Answer one batched round of parity queries."""
        ...


def pass_permutations(n: int, num_passes: int, shuffle_seed: bytes) -> list[np.ndarray]:
    """Seeded per-pass permutations; pass 1 is the identity."""
    source = BitSource(shuffle_seed)
    perms = [np.arange(n, dtype=np.int64)]
    for p in range(1, num_passes):
        perms.append(source.fork(f"cascade-pass-{p}").permutation(n))
    return perms


def sweep_slices(n: int) -> list[np.ndarray]:
    """Index sets {i : bit b of i set}, b = 0..ceil(log2 n)-1."""
    if n <= 1:
        return []
    idx = np.arange(n, dtype=np.int64)
    bits = max(1, math.ceil(math.log2(n)))
    return [np.nonzero((idx >> b) & 1)[0] for b in range(bits)]


class QuerySpaces:
    """Shared index arrays both parties derive from (n, num_passes, seed)."""

    def __init__(self, n: int, perms: Sequence[np.ndarray]):
        self.n = n
        self.perms = list(perms)
        self.slices = sweep_slices(n)
        self._raw = np.arange(n, dtype=np.int64)

    @classmethod
    def from_seed(cls, n: int, num_passes: int, shuffle_seed: bytes) -> "QuerySpaces":
        return cls(n, pass_permutations(n, num_passes, shuffle_seed))

    def array(self, space: int) -> np.ndarray:
        if space == RAW_SPACE:
            return self._raw
        if space >= SWEEP_BASE:
            b = space - SWEEP_BASE
            if b >= len(self.slices):
                raise ParameterError(f"no sweep slice {b}")
            return self.slices[b]
        if 0 <= space < len(self.perms):
            return self.perms[space]
        raise ParameterError(f"unknown query space {space}")

    def resolve(self, q: ParityQuery) -> np.ndarray:
        arr = self.array(q.space)
        if not 0 <= q.lo <= q.hi <= arr.size:
            raise ParameterError(f"query range [{q.lo}, {q.hi}) out of bounds")
        return arr[q.lo : q.hi]


class RangeParityBackend:
    """Answers parity queries against one key and shared query spaces."""

    def __init__(self, key: np.ndarray, spaces: QuerySpaces):
        self.key = np.ascontiguousarray(key, dtype=np.uint8)
        self.spaces = spaces

    def parity(self, q: ParityQuery) -> int:
        return int(self.key[self.spaces.resolve(q)].sum() & 1)

    def parities(self, queries: Sequence[ParityQuery]) -> list[int]:
        return [self.parity(q) for q in queries]


class LocalParityOracle:
    """In-process oracle over the reference key (tests and desk runs)."""

    def __init__(self, reference_key: np.ndarray, spaces: QuerySpaces):
        self.backend = RangeParityBackend(reference_key, spaces)
        self.calls = 0
        self.answered = 0

    def parities(self, queries: Sequence[ParityQuery]) -> list[int]:
        self.calls += 1
        self.answered += len(queries)
        return self.backend.parities(queries)


class _Corrector:
    """Single reconciliation run; see module docstring for the protocol."""

    def __init__(
        self,
        key: np.ndarray,
        oracle: ParityOracle,
        qber_estimate: float,
        config: CascadeConfig,
        spaces: QuerySpaces,
    ):
        self.key = np.array(key, dtype=np.uint8, copy=True)
        self.n = int(self.key.size)
        self.oracle = oracle
        self.config = config
        self.spaces = spaces
        if len(spaces.perms) != config.num_passes:
            raise ParameterError("one permutation per pass is required")
        self.sizes = config.block_sizes(self.n, qber_estimate)

        # Per pass: block starts, index -> block id, odd-mismatch flags.
        self.starts: list[np.ndarray] = []
        self.block_of: list[np.ndarray] = []
        self.odd: list[np.ndarray] = []
        for p, k in enumerate(self.sizes):
            starts = np.arange(0, max(self.n, 1), k, dtype=np.int64)
            self.starts.append(starts)
            pos = np.empty(self.n, dtype=np.int64)
            pos[self.spaces.perms[p]] = np.arange(self.n, dtype=np.int64)
            self.block_of.append(pos // k)
            self.odd.append(np.zeros(len(starts), dtype=np.uint8))

        self.transcript: list[ParityRecord] = []
        self.parity_messages = 0
        self.corrections: list[int] = []
        self.passes_open = 0  # how many passes have compared top-level parities
        self._correction_cap = max(16, _MAX_CORRECTIONS_FACTOR * self.n)

    # -- channel plumbing -----------------------------------------------------

    def _ask(self, queries: list[ParityQuery], labels: list[tuple[str, str]]) -> list[int]:
        if not queries:
            return []
        answers = self.oracle.parities(queries)
        if len(answers) != len(queries):
            raise ParameterError("oracle returned a short parity batch")
        self.parity_messages += 1
        for (pass_label, block_label), bit in zip(labels, answers):
            self.transcript.append(ParityRecord(pass_label, block_label, int(bit) & 1))
        return [int(a) & 1 for a in answers]

    # -- local parity helpers ---------------------------------------------------

    def _my_parity(self, space: int, lo: int, hi: int) -> int:
        return int(self.key[self.spaces.array(space)[lo:hi]].sum() & 1)

    def _my_block_parities(self, p: int) -> np.ndarray:
        permuted = self.key[self.spaces.perms[p]]
        return (np.add.reduceat(permuted.astype(np.int64), self.starts[p]) & 1).astype(
            np.uint8
        )

    def _flip(self, index: int) -> None:
        self.key[index] ^= 1
        self.corrections.append(int(index))
        if len(self.corrections) > self._correction_cap:
            raise ResidualErrorsError(
                "correction count exceeded cap; peer parities are inconsistent"
            )
        for p in range(self.passes_open):
            self.odd[p][self.block_of[p][index]] ^= 1

    # -- core stages --------------------------------------------------------------

    def run(self) -> CascadeResult:
        if self.n == 0:
            return CascadeResult(self.key, 0, 0, [], [])
        for p in range(self.config.num_passes):
            self._open_pass(p)
            self._drain_odd_blocks()
        if self.config.verify_sweep:
            self._verification_sweep()
        return CascadeResult(
            corrected_key=self.key,
            leaked_bits=len(self.transcript),
            parity_messages=self.parity_messages,
            corrections=self.corrections,
            transcript=self.transcript,
        )

    def _block_range(self, p: int, b: int) -> tuple[int, int]:
        starts = self.starts[p]
        lo = int(starts[b])
        hi = int(starts[b + 1]) if b + 1 < len(starts) else self.n
        return lo, hi

    def _open_pass(self, p: int) -> None:
        queries = []
        labels = []
        for b in range(len(self.starts[p])):
            lo, hi = self._block_range(p, b)
            queries.append(ParityQuery(p, lo, hi))
            labels.append((f"pass-{p + 1}", f"block-{b}"))
        theirs = np.array(self._ask(queries, labels), dtype=np.uint8)
        mine = self._my_block_parities(p)
        self.odd[p] = theirs ^ mine
        self.passes_open = p + 1

    def _drain_odd_blocks(self) -> None:
        """Correct every odd block across all opened passes (backtracking)."""
        while True:
            target = None
            for p in range(self.passes_open):
                if self.odd[p].any():
                    target = p
                    break
            if target is None:
                return
            blocks = np.nonzero(self.odd[target])[0]
            self._binary_wave(target, blocks)

    def _binary_wave(self, p: int, blocks: np.ndarray) -> None:
        """Lockstep bisection of disjoint same-pass blocks."""
        active = []
        for b in blocks:
            lo, hi = self._block_range(p, int(b))
            active.append([int(b), lo, hi])
        label = f"pass-{p + 1}"
        while active:
            queries = []
            labels = []
            for b, lo, hi in active:
                mid = (lo + hi) // 2
                queries.append(ParityQuery(p, lo, mid))
                labels.append((label, f"block-{b}:bisect"))
            answers = self._ask(queries, labels)
            next_active = []
            for entry, theirs in zip(active, answers):
                b, lo, hi = entry
                mid = (lo + hi) // 2
                mine = self._my_parity(p, lo, mid)
                if mine != theirs:
                    hi = mid
                else:
                    lo = mid
                if hi - lo == 1:
                    self._flip(int(self.spaces.perms[p][lo]))
                else:
                    next_active.append([b, lo, hi])
            active = next_active

    # -- verification sweep ----------------------------------------------------

    def _verification_sweep(self) -> None:
        spaces = [RAW_SPACE] + [SWEEP_BASE + b for b in range(len(self.spaces.slices))]
        names = ["full"] + [f"slice-{b}" for b in range(len(self.spaces.slices))]
        for _ in range(_MAX_SWEEP_ROUNDS):
            queries = [
                ParityQuery(s, 0, int(self.spaces.array(s).size)) for s in spaces
            ]
            labels = [("sweep", name) for name in names]
            theirs = self._ask(queries, labels)
            mine = [self._my_parity(s, 0, int(self.spaces.array(s).size)) for s in spaces]
            mismatched = [i for i, (a, b) in enumerate(zip(theirs, mine)) if a != b]
            if not mismatched:
                return
            # Repair one error via the first mismatched set, then recheck.
            space = spaces[mismatched[0]]
            self._binary_over_space(space, names[mismatched[0]])
            self._drain_odd_blocks()
        raise ResidualErrorsError("verification sweep failed to converge")

    def _binary_over_space(self, space: int, name: str) -> None:
        arr = self.spaces.array(space)
        lo, hi = 0, int(arr.size)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            theirs = self._ask(
                [ParityQuery(space, lo, mid)], [("sweep", f"{name}:bisect")]
            )[0]
            mine = self._my_parity(space, lo, mid)
            if mine != theirs:
                hi = mid
            else:
                lo = mid
        self._flip(int(arr[lo]))


def cascade_reconcile(
    key: np.ndarray,
    oracle: ParityOracle,
    qber_estimate: float,
    config: CascadeConfig | None = None,
    spaces: QuerySpaces | None = None,
    shuffle_seed: bytes | None = None,
) -> CascadeResult:
    """Correct ``key`` against the reference behind ``oracle``.

    Either pass the shared query spaces explicitly or a ``shuffle_seed``
    from which both sides derive them.
    """
    config = config or CascadeConfig()
    if not 0.0 <= qber_estimate <= 1.0:
        raise ParameterError("qber estimate must be in [0, 1]")
    key = np.ascontiguousarray(key, dtype=np.uint8)
    if spaces is None:
        if shuffle_seed is None:
            raise ParameterError("need query spaces or a shuffle seed")
        spaces = QuerySpaces.from_seed(key.size, config.num_passes, shuffle_seed)
    return _Corrector(key, oracle, qber_estimate, config, spaces).run()


def reconcile_pair(
    alice_key: np.ndarray,
    bob_key: np.ndarray,
    qber_estimate: float,
    shuffle_seed: bytes,
    config: CascadeConfig | None = None,
) -> tuple[CascadeResult, LocalParityOracle]:
    """Run a whole desk-scale reconciliation in process.

    Returns Bob's result plus the Alice-side oracle; comparing
    ``result.corrected_key`` with ``alice_key`` is the caller's check.
    """
    config = config or CascadeConfig()
    alice_key = np.ascontiguousarray(alice_key, dtype=np.uint8)
    bob_key = np.ascontiguousarray(bob_key, dtype=np.uint8)
    if alice_key.size != bob_key.size:
        raise ParameterError("keys must have equal length")
    spaces = QuerySpaces.from_seed(alice_key.size, config.num_passes, shuffle_seed)
    oracle = LocalParityOracle(alice_key, spaces)
    result = cascade_reconcile(bob_key, oracle, qber_estimate, config, spaces=spaces)
    return result, oracle
