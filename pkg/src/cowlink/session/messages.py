"""Classical-channel message framing.

Frame layout (all integers big-endian):

    [4B length][1B type][8B sequence][payload][8B tag]

``length`` counts every byte after the length field, so a frame with a
1-byte payload occupies 22 bytes total. The tag authenticates
type || sequence || payload under the per-direction key pool.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..errors import FrameError, ParameterError

__all__ = [
    "MessageType",
    "Message",
    "encode_message",
    "decode_message",
    "decode_frame",
    "pack_bits",
    "unpack_bits",
    "pack_u64s",
    "unpack_u64s",
    "TAG_BYTES",
    "HEADER_BYTES",
]

TAG_BYTES = 8
HEADER_BYTES = 4 + 1 + 8  # length + type + sequence
MAX_PAYLOAD = 2**32 - 1 - (1 + 8 + TAG_BYTES)


class MessageType(IntEnum):
    SIFT_ANNOUNCE = 1
    DECOY_REPORT = 2
    VISIBILITY_REPORT = 3
    PARITY_REQUEST = 4
    PARITY_RESPONSE = 5
    SHUFFLE_SEED = 6
    PA_SEED = 7
    KEY_CONFIRM = 8
    ABORT = 9


@dataclass(frozen=True)
class Message:
    type: MessageType
    sequence: int
    payload: bytes
    auth_tag: bytes = b"\x00" * TAG_BYTES

    def signed_bytes(self) -> bytes:
        """The bytes covered by the authentication tag."""
        return struct.pack(">BQ", int(self.type), self.sequence) + self.payload


def encode_message(msg: Message) -> bytes:
    if len(msg.payload) > MAX_PAYLOAD:
        raise ParameterError("payload too large for a single frame")
    if len(msg.auth_tag) != TAG_BYTES:
        raise ParameterError(f"tag must be {TAG_BYTES} bytes")
    body = msg.signed_bytes() + msg.auth_tag
    return struct.pack(">I", len(body)) + body


def decode_frame(buf: bytes, offset: int = 0) -> tuple[Message, int]:
    """Decode one frame starting at ``offset``; returns (message, next)."""
    if offset < 0 or offset > len(buf):
        raise FrameError("offset outside buffer", offset)
    if len(buf) - offset < 4:
        raise FrameError("truncated length field", offset)
    (length,) = struct.unpack_from(">I", buf, offset)
    start = offset + 4
    if length < 1 + 8 + TAG_BYTES:
        raise FrameError(f"frame body too short ({length} bytes)", offset)
    if len(buf) - start < length:
        raise FrameError("truncated frame body", start)
    type_byte = buf[start]
    try:
        mtype = MessageType(type_byte)
    except ValueError:
        raise FrameError(f"unknown message type {type_byte}", start) from None
    (sequence,) = struct.unpack_from(">Q", buf, start + 1)
    payload = bytes(buf[start + 9 : start + length - TAG_BYTES])
    tag = bytes(buf[start + length - TAG_BYTES : start + length])
    return Message(mtype, sequence, payload, tag), start + length


def decode_message(buf: bytes) -> Message:
    """Decode exactly one frame; trailing bytes are a frame error."""
    msg, end = decode_frame(buf, 0)
    if end != len(buf):
        raise FrameError("trailing bytes after frame", end)
    return msg


# -- payload helpers ---------------------------------------------------------


def pack_bits(bits: np.ndarray) -> bytes:
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    return struct.pack(">Q", bits.size) + np.packbits(bits).tobytes()


def unpack_bits(data: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    (n,) = struct.unpack_from(">Q", data, offset)
    nbytes = (n + 7) // 8
    start = offset + 8
    raw = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=start)
    return np.unpackbits(raw)[:n].astype(np.uint8), start + nbytes


def pack_u64s(values: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(values, dtype=">u8")
    return struct.pack(">Q", arr.size) + arr.tobytes()


def unpack_u64s(data: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    (n,) = struct.unpack_from(">Q", data, offset)
    start = offset + 8
    arr = np.frombuffer(data, dtype=">u8", count=n, offset=start).astype(np.int64)
    return arr, start + 8 * n
