"""Wegman-Carter message authentication.

Tags are a polynomial-evaluation universal hash over GF(2^64) encrypted
with a one-time pad. Every tag (and every verification) withdraws fresh
key material from an :class:`AuthKeyPool`: 64 bits of hash key plus
``tag_len`` bits of pad. Withdrawals are strictly monotone and audited;
no bit index is ever used twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import KeyDepletionError, ParameterError

__all__ = ["AuthKeyPool", "wc_tag", "wc_verify", "poly_hash_gf64", "TAG_LEN_BITS"]

TAG_LEN_BITS = 64
_HASH_KEY_BITS = 64

# x^64 + x^4 + x^3 + x + 1, the low 64 bits of the reduction polynomial.
_GF64_POLY = 0x1B
_MASK64 = (1 << 64) - 1


def _gf64_mul(a: int, b: int) -> int:
    """Carry-less multiply of two 64-bit field elements, reduced mod the
    fixed irreducible polynomial."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a >> 64:
            a = (a & _MASK64) ^ _GF64_POLY
    return result


def poly_hash_gf64(key: int, message: bytes) -> int:
    """Horner evaluation of the message polynomial at ``key``.

    The message is split into 64-bit blocks (zero-padded) and a final
    block encodes the bit length, so extension and truncation both
    change the hash.
    """
    acc = 0
    for off in range(0, len(message), 8):
        block = int.from_bytes(message[off : off + 8].ljust(8, b"\x00"), "big")
        acc = _gf64_mul(acc ^ block, key)
    acc = _gf64_mul(acc ^ (8 * len(message)), key)
    return acc


@dataclass
class AuthKeyPool:
    """Single-owner pool of secret bits consumed monotonically.

    ``ledger`` records every withdrawal as (start_bit, n_bits, purpose)
    so tests can audit that no index is spent twice.
    """

    bits: np.ndarray
    consumed: int = 0
    ledger: list[tuple[int, int, str]] = field(default_factory=list)

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1 or (self.bits.size and self.bits.max() > 1):
            raise ParameterError("pool bits must be a flat 0/1 array")

    @property
    def total(self) -> int:
        return int(self.bits.size)

    @property
    def available(self) -> int:
        return self.total - self.consumed

    def withdraw(self, n_bits: int, purpose: str = "auth") -> np.ndarray:
        if n_bits < 0:
            raise ParameterError("withdrawal must be >= 0")
        if self.available < n_bits:
            raise KeyDepletionError(
                f"pool holds {self.available} bits, requested {n_bits}"
            )
        start = self.consumed
        self.consumed += n_bits
        self.ledger.append((start, n_bits, purpose))
        return self.bits[start : start + n_bits]

    def replenish(self, fresh_bits: np.ndarray) -> None:
        fresh = np.ascontiguousarray(fresh_bits, dtype=np.uint8)
        self.bits = np.concatenate([self.bits, fresh])

    def clone(self) -> "AuthKeyPool":
        """Synchronized copy (the peer's view of the same pre-shared key)."""
        return AuthKeyPool(bits=self.bits.copy())


def _bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def wc_tag(pool: AuthKeyPool, message: bytes, tag_len: int = TAG_LEN_BITS) -> bytes:
    """Authenticate ``message``: hash under a fresh key, XOR a fresh pad."""
    if not 0 < tag_len <= 64:
        raise ParameterError("tag length must be in 1..64 bits")
    key = _bits_to_int(pool.withdraw(_HASH_KEY_BITS, "wc-hash-key"))
    pad = _bits_to_int(pool.withdraw(tag_len, "wc-pad"))
    digest = poly_hash_gf64(key, message) >> (64 - tag_len)
    tag = digest ^ pad
    return tag.to_bytes((tag_len + 7) // 8, "big")


def wc_verify(
    pool: AuthKeyPool, message: bytes, tag: bytes, tag_len: int = TAG_LEN_BITS
) -> bool:
    """Recompute the tag from the synchronized pool and compare.

    Consumes exactly the key material :func:`wc_tag` consumed, so the
    two pools stay in lockstep whether or not the tag matches.
    """
    expected = wc_tag(pool, message, tag_len)
    return expected == tag
