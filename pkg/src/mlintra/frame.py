"""Sample containers, block addressing and raw planar YUV 4:2:0 I/O.

Samples are stored as ``uint16`` rasters indexed ``[y, x]``. A :class:`Frame`
always carries three planes (Y, Cb, Cr) with chroma at half resolution in
both directions. Frames are immutable once built: their plane arrays are
marked read-only so they can be shared between workers.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ConfigError, TruncationError

__all__ = [
    "Frame",
    "BlockRegion",
    "BlockView",
    "load_yuv",
    "write_yuv",
    "block_view",
    "frame_bytes",
    "pad_frame",
    "crop_frame",
]

BLOCK_SIZES = (4, 8, 16, 32, 64)
CTU_SIZE = 64


def _check_bit_depth(bit_depth: int) -> None:
    if bit_depth not in (8, 10):
        raise ConfigError(f"bit depth must be 8 or 10, got {bit_depth}")


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    bit_depth: int
    planes: tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self):
        _check_bit_depth(self.bit_depth)
        if self.width <= 0 or self.height <= 0 or self.width % 2 or self.height % 2:
            raise ConfigError(
                f"frame dimensions must be positive and even, got {self.width}x{self.height}")
        if len(self.planes) != 3:
            raise ConfigError("a frame needs exactly three planes")
        shapes = [(self.height, self.width),
                  (self.height // 2, self.width // 2),
                  (self.height // 2, self.width // 2)]
        frozen = []
        for plane, shape in zip(self.planes, shapes):
            arr = np.array(plane, dtype=np.uint16)
            if arr.shape != shape:
                raise ConfigError(f"plane shape {arr.shape} != expected {shape}")
            if arr.size and int(arr.max()) >= (1 << self.bit_depth):
                raise ConfigError(f"sample exceeds {self.bit_depth}-bit range")
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "planes", tuple(frozen))

    @classmethod
    def from_planes(cls, y, cb, cr, bit_depth: int = 8) -> "Frame":
        y = np.asarray(y)
        return cls(y.shape[1], y.shape[0], bit_depth, (y, cb, cr))

    @classmethod
    def filled(cls, width: int, height: int, value: int, bit_depth: int = 8) -> "Frame":
        return cls(width, height, bit_depth, (
            np.full((height, width), value, np.uint16),
            np.full((height // 2, width // 2), value, np.uint16),
            np.full((height // 2, width // 2), value, np.uint16)))

    @property
    def luma(self) -> np.ndarray:
        return self.planes[0]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and self.bit_depth == other.bit_depth
                and all(np.array_equal(a, b) for a, b in zip(self.planes, other.planes)))

    __hash__ = None


@dataclass(frozen=True)
class BlockRegion:
    """Square block of ``size`` samples whose top-left corner is ``(x, y)``."""

    plane: int
    x: int
    y: int
    size: int

    def __post_init__(self):
        if self.plane not in (0, 1, 2):
            raise ConfigError(f"plane id must be 0, 1 or 2, got {self.plane}")
        if self.size not in BLOCK_SIZES:
            raise ConfigError(f"block size must be one of {BLOCK_SIZES}, got {self.size}")
        if self.x % 4 or self.y % 4 or self.x < 0 or self.y < 0:
            raise BoundsError(f"block origin ({self.x}, {self.y}) must be non-negative multiples of 4")

    def check_inside(self, shape: tuple[int, int]) -> None:
        h, w = shape
        if self.x + self.size > w or self.y + self.size > h:
            raise BoundsError(
                f"{self.size}x{self.size} block at ({self.x}, {self.y}) exceeds {w}x{h} plane")


class BlockView:
    """Read-only accessor over one block; ``view(x, y)`` reads relative to the origin."""

    def __init__(self, samples: np.ndarray, region: BlockRegion):
        self.samples = samples
        self.region = region

    def __call__(self, x: int, y: int) -> int:
        n = self.region.size
        if not (0 <= x < n and 0 <= y < n):
            raise BoundsError(f"({x}, {y}) outside {n}x{n} block")
        return int(self.samples[y, x])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.samples, dtype=dtype)


def block_view(frame: Frame, region: BlockRegion) -> BlockView:
    plane = frame.planes[region.plane]
    region.check_inside(plane.shape)
    view = plane[region.y:region.y + region.size, region.x:region.x + region.size]
    return BlockView(view, region)


def frame_bytes(width: int, height: int, bit_depth: int) -> int:
    """Byte size of one planar 4:2:0 frame."""
    _check_bit_depth(bit_depth)
    samples = width * height + 2 * (width // 2) * (height // 2)
    return samples * (1 if bit_depth == 8 else 2)


def load_yuv(path, width: int, height: int, bit_depth: int = 8, frame_index: int = 0) -> Frame:
    """Read frame ``frame_index`` of a headerless planar 4:2:0 file.

    10-bit files hold one little-endian 16-bit word per sample.
    """
    size = frame_bytes(width, height, bit_depth)
    if frame_index < 0:
        raise ConfigError("frame index must be non-negative")
    available = os.path.getsize(path)
    needed = size * (frame_index + 1)
    if available < needed:
        raise TruncationError(needed, available)
    with open(path, "rb") as fh:
        fh.seek(size * frame_index)
        raw = fh.read(size)
    dtype = np.uint8 if bit_depth == 8 else np.dtype("<u2")
    data = np.frombuffer(raw, dtype=dtype).astype(np.uint16)
    cw, ch = width // 2, height // 2
    y = data[:width * height].reshape(height, width)
    cb = data[width * height:width * height + cw * ch].reshape(ch, cw)
    cr = data[width * height + cw * ch:].reshape(ch, cw)
    return Frame(width, height, bit_depth, (y, cb, cr))


def count_frames(path, width: int, height: int, bit_depth: int = 8) -> int:
    return os.path.getsize(path) // frame_bytes(width, height, bit_depth)


def write_yuv(frame: Frame, path, append: bool = False) -> None:
    dtype = np.uint8 if frame.bit_depth == 8 else np.dtype("<u2")
    with open(path, "ab" if append else "wb") as fh:
        for plane in frame.planes:
            fh.write(np.ascontiguousarray(plane, dtype=dtype).tobytes())


def pad_frame(frame: Frame, multiple: int = CTU_SIZE) -> Frame:
    """Edge-replicate a frame up to dimensions that are multiples of ``multiple``."""
    pw = -(-frame.width // multiple) * multiple
    ph = -(-frame.height // multiple) * multiple
    if (pw, ph) == (frame.width, frame.height):
        return frame
    planes = []
    for i, plane in enumerate(frame.planes):
        s = 1 if i == 0 else 2
        h, w = plane.shape
        planes.append(np.pad(plane, ((0, ph // s - h), (0, pw // s - w)), mode="edge"))
    return Frame(pw, ph, frame.bit_depth, tuple(planes))


def crop_frame(frame: Frame, width: int, height: int) -> Frame:
    if (width, height) == (frame.width, frame.height):
        return frame
    planes = (frame.planes[0][:height, :width],
              frame.planes[1][:height // 2, :width // 2],
              frame.planes[2][:height // 2, :width // 2])
    return Frame(width, height, frame.bit_depth, planes)
