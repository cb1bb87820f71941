"""Exception hierarchy shared across the simulator."""


class CowlinkError(Exception):
    """Base class for all simulator errors."""


class ParameterError(CowlinkError, ValueError):
    """A supplied parameter violates its documented domain."""


class ConfigError(CowlinkError, ValueError):
    """Configuration file or override is malformed or names unknown keys."""


class UndefinedQberError(CowlinkError, ArithmeticError):
    """QBER is requested for a link with no click mechanism at all."""


class UndefinedVisibilityError(CowlinkError, ArithmeticError):
    """Fringe visibility is undefined (zero counts on the reference port)."""


class InsufficientStatisticsError(CowlinkError, RuntimeError):
    """Monitor-line counts are absent, so no visibility can be quoted."""


class ProtocolViolationError(CowlinkError, RuntimeError):
    """A peer announcement or message breaks the protocol contract."""


class FrameError(CowlinkError, ValueError):
    """A classical-channel frame failed to parse or verify.

    ``position`` is the byte offset within the buffer at which decoding
    failed.
    """

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at byte {position})")
        self.position = position


class AuthenticationError(CowlinkError, RuntimeError):
    """A message tag failed verification (tampering or pool desync)."""


class KeyDepletionError(CowlinkError, RuntimeError):
    """The authentication key pool cannot cover the requested withdrawal."""


class ResidualErrorsError(CowlinkError, RuntimeError):
    """Reconciliation finished but the keys still disagree."""


class TransportError(CowlinkError, RuntimeError):
    """The classical channel failed mid-exchange."""


class SessionAbort(CowlinkError, RuntimeError):
    """A key-exchange session stopped before completing its blocks."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason
