"""Authenticated in-process duplex channel.

The two endpoints of a session share this channel; the reference
execution interleaves them deterministically in one thread, so a send
is delivered by handing the encoded frame to the peer's ``receive``.
The channel keeps the byte-exact transcript of every frame in order,
which the session dumps for audit and replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..distillation.auth import AuthKeyPool, wc_tag, wc_verify
from ..errors import AuthenticationError, ProtocolViolationError
from .messages import Message, MessageType, TAG_BYTES, decode_message, encode_message

__all__ = ["TranscriptEntry", "Endpoint", "make_channel"]


@dataclass
class TranscriptEntry:
    direction: str  # "A->B" or "B->A"
    frame: bytes


@dataclass
class Endpoint:
    name: str
    send_pool: AuthKeyPool
    recv_pool: AuthKeyPool
    transcript: list[TranscriptEntry]
    direction: str
    send_seq: int = 0
    recv_seq: int = -1

    def send(self, mtype: MessageType, payload: bytes) -> bytes:
        """Tag, frame, and log one outgoing message; returns the frame."""
        unsigned = Message(mtype, self.send_seq, payload)
        tag = wc_tag(self.send_pool, unsigned.signed_bytes(), TAG_BYTES * 8)
        frame = encode_message(Message(mtype, self.send_seq, payload, tag))
        self.send_seq += 1
        self.transcript.append(TranscriptEntry(self.direction, frame))
        return frame

    def receive(self, frame: bytes, expect: MessageType | None = None) -> Message:
        """Decode, verify, and order-check one incoming frame."""
        msg = decode_message(frame)
        if not wc_verify(self.recv_pool, msg.signed_bytes(), msg.auth_tag, TAG_BYTES * 8):
            raise AuthenticationError(
                f"{self.name}: tag verification failed on {msg.type.name}"
            )
        if msg.sequence <= self.recv_seq:
            raise ProtocolViolationError(
                f"{self.name}: sequence {msg.sequence} not increasing"
            )
        self.recv_seq = msg.sequence
        if expect is not None and msg.type != expect:
            if msg.type == MessageType.ABORT:
                raise ProtocolViolationError(
                    f"{self.name}: peer aborted: {msg.payload.decode('utf-8', 'replace')}"
                )
            raise ProtocolViolationError(
                f"{self.name}: expected {expect.name}, got {msg.type.name}"
            )
        return msg

    @property
    def auth_bits_consumed(self) -> int:
        return self.send_pool.consumed + self.recv_pool.consumed


def make_channel(
    a2b_key_bits: np.ndarray, b2a_key_bits: np.ndarray
) -> tuple[Endpoint, Endpoint, list[TranscriptEntry]]:
    """Wire up both endpoints over synchronized pre-shared pools."""
    transcript: list[TranscriptEntry] = []
    a2b = AuthKeyPool(np.ascontiguousarray(a2b_key_bits, dtype=np.uint8))
    b2a = AuthKeyPool(np.ascontiguousarray(b2a_key_bits, dtype=np.uint8))
    alice = Endpoint(
        name="alice",
        send_pool=a2b,
        recv_pool=b2a.clone(),
        transcript=transcript,
        direction="A->B",
    )
    bob = Endpoint(
        name="bob",
        send_pool=b2a,
        recv_pool=a2b.clone(),
        transcript=transcript,
        direction="B->A",
    )
    return alice, bob, transcript
