"""Session orchestration: channel, key store, sampling, runner."""

from .channel import Endpoint, TranscriptEntry, make_channel
from .keystore import KeyStore
from .messages import Message, MessageType, decode_frame, decode_message, encode_message
from .runner import SessionConfig, SessionReport, run_session
from .sampling import SampledBlock, sample_block

__all__ = [
    "Endpoint",
    "TranscriptEntry",
    "make_channel",
    "KeyStore",
    "Message",
    "MessageType",
    "decode_frame",
    "decode_message",
    "encode_message",
    "SessionConfig",
    "SessionReport",
    "run_session",
    "SampledBlock",
    "sample_block",
]
