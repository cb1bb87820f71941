"""Per-block distillation bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParameterError

__all__ = ["DistillationRecord"]


@dataclass(frozen=True)
class DistillationRecord:
    block_id: int
    n_sifted: int
    qber: float
    leaked_bits: int
    visibility: float
    eve_bound_per_bit: float
    secret_len: int
    epsilon_pa: float
    visibility_reliable: bool = True
    sim_time_s: float = 0.0
    confirmed: bool = False

    def __post_init__(self):
        if self.secret_len > self.n_sifted:
            raise ParameterError("secret length cannot exceed sifted length")
        if self.leaked_bits < 0:
            raise ParameterError("leaked bits must be >= 0")
        if not 0.0 <= self.qber <= 0.5:
            raise ParameterError("qber must be in [0, 0.5]")
