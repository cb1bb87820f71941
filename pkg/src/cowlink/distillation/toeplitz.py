"""Toeplitz-matrix universal hashing over GF(2).

Used for privacy amplification and for the final key-confirmation
digest. The matrix convention is fixed: for input length L and output
length m the seed holds L + m − 1 bits and

    T[i][j] = seed[i − j + L − 1],

so each descending diagonal is constant. The production path computes
the product as a convolution; :func:`toeplitz_hash_naive` is the
independent dense oracle it must match bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..errors import ParameterError

__all__ = ["ToeplitzSeed", "toeplitz_hash", "toeplitz_hash_naive"]

# Above this operand size the FFT path wins over direct convolution.
_FFT_THRESHOLD = 4096


@dataclass(frozen=True)
class ToeplitzSeed:
    """Seed bits pinning one Toeplitz matrix of shape (out_len, in_len)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ParameterError("seed bits must be one-dimensional")
        if np.any(bits > 1):
            raise ParameterError("seed bits must be 0/1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    def check(self, in_len: int, out_len: int) -> None:
        want = in_len + out_len - 1
        if len(self) != want:
            raise ParameterError(
                f"seed length {len(self)} != in_len + out_len - 1 = {want}"
            )


def toeplitz_hash(seed: ToeplitzSeed, bits: np.ndarray, out_len: int) -> np.ndarray:
    """Hash ``bits`` down to ``out_len`` bits with the seeded matrix.

    output[i] = XOR_j seed[i − j + L − 1] · bits[j], computed as the
    (L−1)..(L−1+m) window of the integer convolution reduced mod 2.
    """
    x = np.ascontiguousarray(bits, dtype=np.uint8)
    if x.ndim != 1:
        raise ParameterError("input bits must be one-dimensional")
    if out_len < 0:
        raise ParameterError("output length must be >= 0")
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    n = x.size
    if n == 0:
        return np.zeros(out_len, dtype=np.uint8)
    seed.check(n, out_len)

    s = seed.bits.astype(np.int64)
    xi = x.astype(np.int64)
    if n * out_len <= _FFT_THRESHOLD * _FFT_THRESHOLD // 64:
        conv = np.convolve(xi, s)
    else:
        # Coefficients are bounded by min(n, len(seed)) << 2**53, so the
        # rounded FFT convolution is exact.
        conv = np.rint(fftconvolve(xi.astype(np.float64), s.astype(np.float64)))
        conv = conv.astype(np.int64)
    return (conv[n - 1 : n - 1 + out_len] & 1).astype(np.uint8)


def toeplitz_hash_naive(seed: ToeplitzSeed, bits: np.ndarray, out_len: int) -> np.ndarray:
    """Dense matrix-vector oracle under the same diagonal convention."""
    x = np.ascontiguousarray(bits, dtype=np.uint8)
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    n = x.size
    if n == 0:
        return np.zeros(out_len, dtype=np.uint8)
    seed.check(n, out_len)
    i = np.arange(out_len)[:, None]
    j = np.arange(n)[None, :]
    matrix = seed.bits[i - j + n - 1]
    return ((matrix @ x.astype(np.int64)) % 2).astype(np.uint8)
