"""Reference line assembly: gather, pad and smooth the samples of line ``L_M``.

Line ``L_M`` of an ``N x N`` block is the sample ring at distance ``M`` from
the block: the row ``y = -M-1`` for ``x = -M-1 .. 2N+M-1`` and the column
``x = -M-1`` for ``y = -M .. 2N+M-1`` (coordinates relative to the block's
top-left sample). That is ``4(N+M)+1`` samples, the corner being shared.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigError

__all__ = [
    "RefLine",
    "gather_reference_line",
    "smooth_reference",
    "needs_smoothing",
    "sample_count",
]

# Minimum distance (in mode indices) from pure H/V above which a size is filtered.
_SMOOTHING_THRESHOLD = {8: 7, 16: 1, 32: 0, 64: 0}


def sample_count(n: int, m: int) -> int:
    return 4 * (n + m) + 1


@dataclass(frozen=True)
class RefLine:
    """Unified reference array for one line around one block.

    ``top`` starts at the corner ``r[-M-1, -M-1]`` and runs rightwards
    (``2(N+M)+1`` samples); ``left`` starts just below the corner and runs
    downwards (``2(N+M)`` samples).
    """

    size: int
    line: int
    bit_depth: int
    top: np.ndarray
    left: np.ndarray
    top_available: np.ndarray
    left_available: np.ndarray
    smoothed: bool = False

    def __len__(self):
        return len(self.top) + len(self.left)

    @property
    def corner(self) -> int:
        return int(self.top[0])

    @property
    def left_with_corner(self) -> np.ndarray:
        return np.concatenate((self.top[:1], self.left))

    def top_at(self, x):
        """Sample ``r[x, -M-1]`` for block-relative ``x``."""
        return self.top[np.asarray(x) + self.line + 1]

    def left_at(self, y):
        """Sample ``r[-M-1, y]`` for block-relative ``y`` (``y = -M-1`` is the corner)."""
        return self.left_with_corner[np.asarray(y) + self.line + 1]

    def sequence(self) -> np.ndarray:
        """Samples in padding order: bottom-left end, up to the corner, then right."""
        return np.concatenate((self.left[::-1], self.top))

    def transposed(self) -> "RefLine":
        """Reference of the transposed block (top and left swap roles)."""
        left_c = self.left_with_corner
        left_av = np.concatenate((self.top_available[:1], self.left_available))
        return replace(self, top=left_c, left=self.top[1:].copy(),
                       top_available=left_av, left_available=self.top_available[1:].copy())


@lru_cache(maxsize=None)
def _ring_offsets(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Block-relative (dx, dy) of every ring sample in padding order."""
    span = 2 * (n + m)
    left_y = np.arange(span - m - 1, -m - 1, -1)      # bottom-left end upward, excluding corner
    top_x = np.arange(-m - 1, span - m)              # corner then rightward
    dx = np.concatenate((np.full(left_y.size, -m - 1), top_x))
    dy = np.concatenate((left_y, np.full(top_x.size, -m - 1)))
    dx.flags.writeable = False
    dy.flags.writeable = False
    return dx, dy


def gather_reference_line(plane: np.ndarray, x0: int, y0: int, size: int, line: int,
                          available: np.ndarray | None = None, bit_depth: int = 8) -> RefLine:
    """Copy line ``L_line`` around the block at ``(x0, y0)`` and pad unavailable samples.

    A sample is available when it lies inside ``plane`` and, if ``available``
    is given, its mask entry is set. Unavailable samples take the value of
    their predecessor in padding order (bottom-left to top-right); leading
    unavailable samples take the first available value; with nothing
    available every sample is ``2**(bit_depth-1)``.
    """
    if line < 0:
        raise ConfigError(f"line index must be >= 0, got {line}")
    dx, dy = _ring_offsets(size, line)
    xs = dx + x0
    ys = dy + y0
    h, w = plane.shape
    inside = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    xc = np.clip(xs, 0, w - 1)
    yc = np.clip(ys, 0, h - 1)
    avail = inside.copy()
    if available is not None:
        avail &= available[yc, xc]
    values = plane[yc, xc].astype(np.int32)

    if not avail.any():
        values[:] = 1 << (bit_depth - 1)
    elif not avail.all():
        idx = np.where(avail, np.arange(values.size), -1)
        idx = np.maximum.accumulate(idx)
        idx[idx < 0] = int(np.argmax(avail))
        values = values[idx]

    n_left = 2 * (size + line)
    return RefLine(size=size, line=line, bit_depth=bit_depth,
                   top=values[n_left:], left=values[:n_left][::-1].copy(),
                   top_available=avail[n_left:], left_available=avail[:n_left][::-1].copy())


def needs_smoothing(size: int, mode: int, is_luma: bool = True) -> bool:
    """Whether the [1 2 1] reference filter applies for this size and mode.

    Never for chroma, 4x4 blocks or DC. Otherwise the mode's distance from
    both pure horizontal (10) and pure vertical (26) must exceed a per-size
    threshold; planar always qualifies.
    """
    if not is_luma or size == 4 or mode == 1:
        return False
    distance = min(abs(mode - 26), abs(mode - 10))
    return distance > _SMOOTHING_THRESHOLD[size]


def _filter_121(seq: np.ndarray) -> np.ndarray:
    out = seq.copy()
    out[1:-1] = (seq[:-2] + 2 * seq[1:-1] + seq[2:] + 2) >> 2
    return out


def smooth_reference(ref: RefLine, mode: int, is_luma: bool = True) -> RefLine:
    """Apply the [1 2 1]/4 filter over the whole ring when the size/mode rule asks for it.

    The condition is evaluated at the block size, independent of the line.
    Both ring endpoints are copied unfiltered.
    """
    if ref.smoothed or not needs_smoothing(ref.size, mode, is_luma):
        return ref
    return force_smooth(ref)


def force_smooth(ref: RefLine) -> RefLine:
    seq = _filter_121(ref.sequence())
    n_left = len(ref.left)
    return replace(ref, top=seq[n_left:], left=seq[:n_left][::-1].copy(), smoothed=True)
