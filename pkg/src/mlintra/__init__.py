"""Multi-line intra prediction codec with residue compensation."""

from .decoder import decode_frame, decode_stream, extract_stream_stats
from .encoder import EncoderConfig, EncodeStats, FastSearchParams, encode_frame, encode_sequence
from .errors import BitstreamError, BoundsError, ConfigError, MlintraError, TruncationError
from .frame import Frame, load_yuv, write_yuv

__all__ = [
    "Frame",
    "load_yuv",
    "write_yuv",
    "EncoderConfig",
    "EncodeStats",
    "FastSearchParams",
    "encode_frame",
    "encode_sequence",
    "decode_frame",
    "decode_stream",
    "extract_stream_stats",
    "MlintraError",
    "ConfigError",
    "BitstreamError",
    "BoundsError",
    "TruncationError",
]

__version__ = "0.1.0"
