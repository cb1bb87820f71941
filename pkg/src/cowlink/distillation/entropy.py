"""Entropy accounting for secret-key distillation.

The eavesdropper-information bound is deliberately pluggable: the
security analysis of the coherent one-way protocol is outside this
artifact's scope, so the default bound is an endpoint-correct
placeholder, monotone in the monitored visibility.
"""

from __future__ import annotations

import math
from typing import Callable

from ..errors import ParameterError

__all__ = [
    "binary_entropy",
    "eve_info_bound",
    "compute_secret_length",
    "resolve_eve_bound",
    "EVE_BOUNDS",
]


def binary_entropy(p: float) -> float:
    """Shannon entropy h(p) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def eve_info_bound(visibility: float) -> float:
    """Default eavesdropper information per sifted bit: h((1 + V)/2).

    Monotone non-increasing in V, 0 at perfect coherence, 1 at none.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ParameterError("visibility must be in [0, 1]")
    return binary_entropy((1.0 + visibility) / 2.0)


EVE_BOUNDS: dict[str, Callable[[float], float]] = {
    "coherence": eve_info_bound,
    # Pessimistic linear interpolation between the same endpoints.
    "linear": lambda v: 1.0 - v,
}


def resolve_eve_bound(bound: str | Callable[[float], float]) -> Callable[[float], float]:
    """Accept a registry name or a callable and return the callable."""
    if callable(bound):
        return bound
    try:
        return EVE_BOUNDS[bound]
    except KeyError:
        raise ParameterError(
            f"unknown eve bound {bound!r}; known: {sorted(EVE_BOUNDS)}"
        ) from None


def compute_secret_length(
    n: int,
    leaked_bits: float,
    visibility: float,
    epsilon_pa: float,
    eve_bound: Callable[[float], float] = eve_info_bound,
) -> int:
    """Extractable secret bits from n sifted bits.

    m = max(0, floor(n·(1 − bound(V)) − leak − 2·log2(1/ε))).
    """
    if n <= 0:
        raise ParameterError("block length must be positive")
    if leaked_bits < 0:
        raise ParameterError("leaked bits must be >= 0")
    if not 0.0 < epsilon_pa < 1.0:
        raise ParameterError("epsilon_pa must be in (0, 1)")
    margin = 2.0 * math.log2(1.0 / epsilon_pa)
    m = math.floor(n * (1.0 - eve_bound(visibility)) - leaked_bits - margin)
    return max(0, m)
