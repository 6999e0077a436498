"""Bit-exact syntax: bit writers/readers and the binarizations of every element.

Everything is written MSB first. A :class:`BitCounter` accepts the same
calls as a :class:`BitWriter` but only counts, so rate estimates during the
RD search run the exact code path that produces the stream.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BitstreamError, ConfigError

__all__ = [
    "BitWriter",
    "BitCounter",
    "BitReader",
    "LINE_MODES",
    "line_alphabet",
    "encode_line_index",
    "decode_line_index",
    "derive_mpm",
    "encode_mode",
    "decode_mode",
    "mode_bits",
    "encode_levels",
    "decode_levels",
    "levels_bits",
    "diagonal_scan",
    "BitstreamHeader",
    "HEADER_SIZE",
    "MAGIC",
]

MAGIC = b"MRLI"
VERSION = 1
HEADER_SIZE = 32
MAX_EG_PREFIX = 32

LINE_MODES = {
    "single": (0,),
    "full4": (0, 1, 2, 3),
    "fast3": (0, 1, 3),
}


class BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bit_count = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        if value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self.bit_count += nbits
        self._acc = (self._acc << nbits) | value
        self._nacc += nbits
        while self._nacc >= 8:
            self._nacc -= 8
            self._bytes.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def write_ue(self, value: int, k: int = 0) -> None:
        """Order-k exponential-Golomb code of a non-negative integer."""
        w = value + (1 << k)
        n = w.bit_length()
        self.write(0, n - 1 - k)
        self.write(w, n)

    def align(self) -> None:
        if self._nacc:
            self.write(0, 8 - self._nacc)

    def getvalue(self) -> bytes:
        """Bytes written so far, zero-padded to a byte boundary."""
        out = bytes(self._bytes)
        if self._nacc:
            out += bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return out

    def bits(self) -> str:
        return "".join(f"{b:08b}" for b in self.getvalue())[:self.bit_count]


class BitCounter:
    """Counting sink with the writer interface."""

    def __init__(self):
        self.bit_count = 0

    def write(self, value: int, nbits: int) -> None:
        self.bit_count += nbits

    def write_ue(self, value: int, k: int = 0) -> None:
        self.bit_count += _ue_length(value, k)

    def align(self) -> None:
        self.bit_count += -self.bit_count % 8


class BitReader:
    def __init__(self, data: bytes, offset: int = 0):
        self._data = data
        self._total = len(data) * 8
        self.position = offset * 8

    def read(self, nbits: int) -> int:
        if nbits == 0:
            return 0
        end = self.position + nbits
        if end > self._total:
            raise BitstreamError("unexpected end of stream", self.position)
        first, last = self.position >> 3, (end - 1) >> 3
        chunk = int.from_bytes(self._data[first:last + 1], "big")
        chunk >>= (last + 1) * 8 - end
        self.position = end
        return chunk & ((1 << nbits) - 1)

    def read_ue(self, k: int = 0) -> int:
        zeros = 0
        while self.read(1) == 0:
            zeros += 1
            if zeros > MAX_EG_PREFIX:
                raise BitstreamError("exp-Golomb prefix too long", self.position)
        w = (1 << (zeros + k)) | self.read(zeros + k)
        return w - (1 << k)

    def align(self) -> None:
        self.position += -self.position % 8

    @property
    def byte_position(self) -> int:
        return self.position >> 3


# -- reference line index -------------------------------------------------------------

def line_alphabet(lines) -> tuple[int, ...]:
    """Normalise a line-mode name or a collection of line indices to a sorted tuple."""
    if isinstance(lines, str):
        try:
            return LINE_MODES[lines]
        except KeyError:
            raise ConfigError(f"unknown line mode {lines!r}") from None
    alphabet = tuple(sorted(set(int(m) for m in lines)))
    if not alphabet or alphabet[0] != 0 or alphabet[-1] > 3:
        raise ConfigError(f"line set must contain L0 and only L0..L3, got {alphabet}")
    return alphabet


def encode_line_index(line: int, lines, writer) -> int:
    """Truncated unary over the alphabet: 0, 10, 110, ... with the last code unterminated."""
    alphabet = line_alphabet(lines)
    if line not in alphabet:
        raise ConfigError(f"line L{line} not in alphabet {alphabet}")
    idx = alphabet.index(line)
    n = idx + 1 if idx < len(alphabet) - 1 else idx
    writer.write(((1 << idx) - 1) << (n - idx), n)
    return n


def decode_line_index(reader: BitReader, lines) -> int:
    alphabet = line_alphabet(lines)
    idx = 0
    while idx < len(alphabet) - 1 and reader.read(1):
        idx += 1
    return alphabet[idx]


# -- intra mode ---------------------------------------------------------------------

def derive_mpm(left: int, above: int) -> tuple[int, int, int]:
    """Three most probable modes from the left and above PU modes (DC when unavailable)."""
    if left == above:
        if left < 2:
            return (0, 1, 26)
        return (left, 2 + ((left + 29) % 32), 2 + ((left - 2 + 1) % 32))
    if 0 not in (left, above):
        third = 0
    elif 1 not in (left, above):
        third = 1
    else:
        third = 26
    return (left, above, third)


def mode_bits(mode: int, mpm) -> int:
    if mode in mpm:
        return 2 if mpm.index(mode) == 0 else 3
    return 6


def encode_mode(mode: int, mpm, writer) -> None:
    """MPM flag, then truncated unary MPM index or a 5-bit remainder."""
    if mode in mpm:
        idx = mpm.index(mode)
        writer.write(1, 1)
        writer.write((0b0, 0b10, 0b11)[idx], 1 if idx == 0 else 2)
    else:
        rem = mode - sum(1 for m in mpm if m < mode)
        writer.write(0, 1)
        writer.write(rem, 5)


def decode_mode(reader: BitReader, mpm) -> int:
    if reader.read(1):
        if reader.read(1) == 0:
            return mpm[0]
        return mpm[1 + reader.read(1)]
    mode = reader.read(5)
    for m in sorted(mpm):
        if m <= mode:
            mode += 1
    return mode


# -- residual levels ----------------------------------------------------------------

@lru_cache(maxsize=None)
def diagonal_scan(size: int) -> np.ndarray:
    """Flat raster indices in up-right diagonal order (bottom-left to top-right per diagonal)."""
    order = []
    for s in range(2 * size - 1):
        for y in range(min(s, size - 1), -1, -1):
            x = s - y
            if x < size:
                order.append(y * size + x)
    scan = np.array(order, dtype=np.intp)
    scan.flags.writeable = False
    return scan


_ORDERS = np.arange(4)[:, None]


def _best_k(values: np.ndarray) -> tuple[int, int]:
    """Exp-Golomb order in 0..3 minimising the total code length, and that length."""
    # frexp's exponent is the exact bit length for integers below 2**53
    nb = np.frexp((values[None, :] >> _ORDERS) + 1)[1]
    costs = 2 * nb.sum(axis=1) + (_ORDERS[:, 0] - 1) * values.size
    k = int(np.argmin(costs))
    return k, int(costs[k])


def _ue_length(value: int, k: int = 0) -> int:
    return 2 * (value + (1 << k)).bit_length() - 1 - k


def encode_levels(levels: np.ndarray, writer) -> None:
    """Coded-block flag, then (run, magnitude, sign) triples in diagonal scan order.

    Runs and ``|level| - 1`` use order-k exp-Golomb codes whose orders are
    chosen per block (2 bits each) to minimise the block's length.
    """
    levels = np.asarray(levels)
    flat = levels.reshape(-1)[diagonal_scan(levels.shape[0])]
    nz = np.flatnonzero(flat)
    if nz.size == 0:
        writer.write(0, 1)
        return
    writer.write(1, 1)
    runs = np.diff(nz, prepend=-1) - 1
    values = flat[nz]
    mags = np.abs(values) - 1
    k_run, run_bits = _best_k(runs)
    k_mag, mag_bits = _best_k(mags)
    if isinstance(writer, BitCounter):
        writer.bit_count += 4 + _ue_length(int(nz.size - 1)) + run_bits + mag_bits + nz.size
        return
    writer.write(k_run, 2)
    writer.write(k_mag, 2)
    writer.write_ue(int(nz.size - 1))
    for run, mag, v in zip(runs.tolist(), mags.tolist(), values.tolist()):
        writer.write_ue(run, k_run)
        writer.write_ue(mag, k_mag)
        writer.write(1 if v < 0 else 0, 1)


def levels_bits(levels: np.ndarray) -> np.ndarray:
    """Code lengths of :func:`encode_levels` for a stack of blocks ``(K, N, N)``."""
    levels = np.asarray(levels, dtype=np.int64)
    count_blocks, n = levels.shape[0], levels.shape[-1]
    flat = levels.reshape(count_blocks, -1)[:, diagonal_scan(n)]
    mask = flat != 0
    count = mask.sum(axis=1)
    pos = np.arange(flat.shape[1])
    last = np.maximum.accumulate(np.where(mask, pos, -1), axis=1)
    prev = np.concatenate((np.full((count_blocks, 1), -1), last[:, :-1]), axis=1)
    runs = np.where(mask, pos - prev - 1, 0)
    mags = np.where(mask, np.abs(flat) - 1, 0)
    orders = np.arange(4)[:, None, None]

    def best(values):
        nb = np.frexp((values[None] >> orders) + 1)[1]
        costs = (np.where(mask[None], 2 * nb - 1 + orders, 0)).sum(axis=2)
        return costs.min(axis=0)

    count_bits = 2 * np.frexp(np.maximum(count, 1))[1] - 1
    coded = 1 + 4 + count_bits + best(runs) + best(mags) + count
    return np.where(count == 0, 1, coded)


def decode_levels(reader: BitReader, size: int) -> np.ndarray:
    flat = np.zeros(size * size, dtype=np.int64)
    if reader.read(1):
        k_run = reader.read(2)
        k_mag = reader.read(2)
        count = reader.read_ue() + 1
        pos = -1
        for _ in range(count):
            pos += reader.read_ue(k_run) + 1
            mag = reader.read_ue(k_mag) + 1
            if pos >= flat.size:
                raise BitstreamError("coefficient run overflows block", reader.position)
            flat[pos] = -mag if reader.read(1) else mag
    out = np.zeros(size * size, dtype=np.int64)
    out[diagonal_scan(size)] = flat
    return out.reshape(size, size)


# -- header ---------------------------------------------------------------------------

_HEADER_STRUCT = struct.Struct("<4sBBHHBBBBBBBxI")
_LINE_MODE_CODES = {"single": 0, "full4": 1, "fast3": 2, "custom": 3}

FLAG_HORIZONTAL_TO_30 = 1
FLAG_NO_COMPENSATION = 2
FLAG_NO_BLEND = 4
FLAG_ALLOW_NXN = 8


@dataclass(frozen=True)
class BitstreamHeader:
    width: int
    height: int
    bit_depth: int
    qp: int
    lossless: bool
    line_mode: str
    lines: tuple[int, ...]
    frame_count: int
    flags: int = FLAG_ALLOW_NXN
    log2_min_cu: int = 3
    log2_max_cu: int = 6

    def pack(self) -> bytes:
        mask = sum(1 << m for m in self.lines)
        raw = _HEADER_STRUCT.pack(MAGIC, VERSION, self.bit_depth, self.width, self.height,
                                  self.qp, int(self.lossless), _LINE_MODE_CODES[self.line_mode],
                                  mask, self.flags, self.log2_min_cu, self.log2_max_cu,
                                  self.frame_count)
        return raw.ljust(HEADER_SIZE, b"\0")

    @classmethod
    def unpack(cls, data: bytes) -> "BitstreamHeader":
        if len(data) < HEADER_SIZE:
            raise BitstreamError(f"stream shorter than the {HEADER_SIZE}-byte header")
        (magic, version, bit_depth, width, height, qp, lossless, mode_code, mask, flags,
         log2_min, log2_max, frames) = _HEADER_STRUCT.unpack_from(data)
        if magic != MAGIC:
            raise BitstreamError(f"bad magic {magic!r}")
        if version != VERSION:
            raise BitstreamError(f"unsupported version {version}")
        names = {v: k for k, v in _LINE_MODE_CODES.items()}
        if mode_code not in names:
            raise BitstreamError(f"unknown line mode code {mode_code}")
        lines = tuple(m for m in range(4) if mask >> m & 1)
        return cls(width, height, bit_depth, qp, bool(lossless), names[mode_code], lines,
                   frames, flags, log2_min, log2_max)
