"""Transcript replay and authentication audit.

A session transcript is a concatenation of wire frames. Given the
session seed (for the bootstrap pools) and the per-direction
replenishment bits recorded in the report, the auditor re-derives both
key streams and verifies every tag in order. Frame direction is not on
the wire; it is recovered by checking which direction's key stream
authenticates the frame, which is unambiguous at 64-bit tags.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..distillation.auth import poly_hash_gf64
from ..errors import FrameError
from .messages import TAG_BYTES, Message, decode_frame

__all__ = ["FrameAudit", "iter_frames", "verify_transcript"]

_TAG_BITS = TAG_BYTES * 8
_KEY_BITS = 64


@dataclass
class FrameAudit:
    index: int
    message: Message | None
    direction: str | None  # "A->B", "B->A", or None when unverifiable
    ok: bool


def iter_frames(transcript: bytes) -> list[Message]:
    """Parse every frame in a transcript dump, strictly in order."""
    messages = []
    offset = 0
    while offset < len(transcript):
        msg, offset = decode_frame(transcript, offset)
        messages.append(msg)
    return messages


class _KeyStreamCursor:
    """Read-only view over one direction's authentication key stream."""

    def __init__(self, bits: np.ndarray):
        self.bits = np.ascontiguousarray(bits, dtype=np.uint8)
        self.cursor = 0

    def _peek_int(self, offset: int, n_bits: int) -> int | None:
        end = self.cursor + offset + n_bits
        if end > self.bits.size:
            return None
        chunk = self.bits[self.cursor + offset : end]
        out = 0
        for b in chunk:
            out = (out << 1) | int(b)
        return out

    def try_verify(self, message: Message) -> bool:
        """Check the tag against the next key+pad; consume on success."""
        key = self._peek_int(0, _KEY_BITS)
        pad = self._peek_int(_KEY_BITS, _TAG_BITS)
        if key is None or pad is None:
            return False
        digest = poly_hash_gf64(key, message.signed_bytes()) >> (64 - _TAG_BITS)
        expected = (digest ^ pad).to_bytes(TAG_BYTES, "big")
        if expected != message.auth_tag:
            return False
        self.cursor += _KEY_BITS + _TAG_BITS
        return True


def verify_transcript(
    transcript: bytes,
    a2b_stream: np.ndarray,
    b2a_stream: np.ndarray,
) -> list[FrameAudit]:
    """Replay a transcript against the two key streams.

    Each stream is the direction's bootstrap bits followed by its
    replenishment bits in order. A frame that fails structural decoding
    or authenticates under neither stream is reported as not ok.
    """
    cursors = {"A->B": _KeyStreamCursor(a2b_stream), "B->A": _KeyStreamCursor(b2a_stream)}
    audits: list[FrameAudit] = []
    offset = 0
    index = 0
    while offset < len(transcript):
        try:
            msg, offset = decode_frame(transcript, offset)
        except FrameError:
            audits.append(FrameAudit(index=index, message=None, direction=None, ok=False))
            return audits
        direction = None
        for name, cursor in cursors.items():
            if cursor.try_verify(msg):
                direction = name
                break
        audits.append(
            FrameAudit(index=index, message=msg, direction=direction, ok=direction is not None)
        )
        if direction is None:
            return audits  # cannot trust stream alignment past a bad frame
        index += 1
    return audits
