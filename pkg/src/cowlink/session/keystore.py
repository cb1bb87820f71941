"""Secret-key storage with an auditable conservation ledger."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import KeyDepletionError, ParameterError

__all__ = ["KeyStore"]


@dataclass
class KeyStore:
    """FIFO store of confirmed secret blocks.

    Withdrawals (for authentication) consume the oldest stored bits
    first, and the conservation invariant
    ``total_generated == available + total_consumed`` holds after every
    operation.
    """

    blocks: list[tuple[int, np.ndarray]] = field(default_factory=list)
    total_generated: int = 0
    total_consumed: int = 0

    @property
    def available(self) -> int:
        return sum(int(bits.size) for _, bits in self.blocks)

    @property
    def block_ids(self) -> list[int]:
        return [bid for bid, _ in self.blocks]

    def deposit(self, block_id: int, bits: np.ndarray) -> None:
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.size and bits.max() > 1:
            raise ParameterError("key bits must be 0/1")
        if block_id in self.block_ids:
            raise ParameterError(f"duplicate block id {block_id}")
        self.blocks.append((block_id, bits))
        self.total_generated += int(bits.size)

    def withdraw_auth(self, n_bits: int) -> np.ndarray:
        if n_bits < 0:
            raise ParameterError("withdrawal must be >= 0")
        if n_bits > self.available:
            raise KeyDepletionError(
                f"store holds {self.available} bits, requested {n_bits}"
            )
        out = []
        remaining = n_bits
        while remaining > 0:
            bid, bits = self.blocks[0]
            take = min(remaining, int(bits.size))
            out.append(bits[:take])
            if take == bits.size:
                self.blocks.pop(0)
            else:
                self.blocks[0] = (bid, bits[take:])
            remaining -= take
        self.total_consumed += n_bits
        return (
            np.concatenate(out) if out else np.zeros(0, dtype=np.uint8)
        )
