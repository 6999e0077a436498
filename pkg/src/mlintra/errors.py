"""Exception types raised by the codec and its tooling."""


class MlintraError(Exception):
    """Base class for all package errors."""


class ConfigError(MlintraError, ValueError):
    """Invalid parameters: bit depth, QP, block size, line mode and so on."""


class TruncationError(MlintraError, EOFError):
    """A raw YUV file holds fewer bytes than the requested frame needs."""

    def __init__(self, needed: int, available: int):
        super().__init__(
            f"truncated YUV input: need {needed} bytes, file has {available}")
        self.needed = needed
        self.available = available


class BoundsError(MlintraError, IndexError):
    """A block region does not lie inside its plane."""


class BitstreamError(MlintraError):
    """Malformed or truncated bitstream."""

    def __init__(self, message: str, bit_position: int | None = None):
        self.reason = message
        if bit_position is not None:
            message = f"{message} (at bit {bit_position})"
        super().__init__(message)
        self.bit_position = bit_position
