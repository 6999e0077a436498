"""35-mode intra prediction from an arbitrary reference line ``L_M``.

Mode 0 is planar, mode 1 is DC and modes 2..34 are angular. Vertical modes
(18..34) project each sample onto the top row of the line, horizontal modes
(2..17) onto the left column; the projection reaches the line at distance
``M+1`` from the first row (or column) of the block, and the 1/32-sample
position is linearly interpolated between its two integer neighbours.

All generators can be evaluated at arbitrary block-relative coordinates,
which is what the residue compensator uses to predict samples of the
interval between the block and a further line.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .reference import RefLine

__all__ = [
    "PLANAR",
    "DC",
    "HOR",
    "VER",
    "NUM_MODES",
    "angle_of_mode",
    "inverse_angle",
    "predict",
    "predict_angular",
    "predict_dc",
    "predict_planar",
    "predict_at",
    "is_vertical_mode",
]

PLANAR, DC, HOR, VER = 0, 1, 10, 26
NUM_MODES = 35

# Displacement in 1/32 sample per row (or column), modes 2..34.
_ANGLES = (32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26,
           -32, -26, -21, -17, -13, -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32)
# round(8192 / d) for the negative displacements; 1/256 precision.
_INV_ANGLES = {-2: -4096, -5: -1638, -9: -910, -13: -630,
               -17: -482, -21: -390, -26: -315, -32: -256}


def angle_of_mode(mode: int) -> int:
    if not 2 <= mode <= 34:
        raise ConfigError(f"mode {mode} has no angular displacement")
    return _ANGLES[mode - 2]


def inverse_angle(d: int) -> int:
    return _INV_ANGLES[d]


def is_vertical_mode(mode: int) -> bool:
    return mode >= 18


def _check_mode(mode: int) -> None:
    if not 0 <= mode < NUM_MODES:
        raise ConfigError(f"intra mode must be in 0..34, got {mode}")


def _angular_lookup(size: int, line: int, mode: int, xs: np.ndarray, ys: np.ndarray):
    """Gather indices and weights realising the two-tap projection at (xs, ys).

    Indices address ``concat(main, side)`` where ``main`` is the line's row
    (vertical modes) or column (horizontal modes) starting at the corner and
    ``side`` is the other arm, also starting at the corner.
    """
    d = angle_of_mode(mode)
    if is_vertical_mode(mode):
        u, v = xs, ys
    else:
        u, v = ys, xs
    length = 2 * (size + line) + 1
    pos = 32 * (u + line + 1) + (v + line + 1) * d
    k = pos >> 5
    frac = pos & 31

    def source(kk):
        src = np.minimum(kk, length - 1)
        neg = kk < 0
        if neg.any():
            if d < 0:
                j = (kk[neg] * _INV_ANGLES[d] + 128) >> 8
                src[neg] = length + np.clip(j, 0, length - 1)
            else:
                src[neg] = 0
        return src

    return source(k.copy()), source(k + 1), (32 - frac), frac


@lru_cache(maxsize=None)
def _grid_lookup(size: int, line: int, mode: int, start: int):
    span = np.arange(start, size)
    ys, xs = np.meshgrid(span, span, indexing="ij")
    tables = _angular_lookup(size, line, mode, xs, ys)
    for t in tables:
        t.flags.writeable = False
    return tables


def _main_side(ref: RefLine, mode: int) -> np.ndarray:
    if is_vertical_mode(mode):
        return np.concatenate((ref.top, ref.left_with_corner))
    return np.concatenate((ref.left_with_corner, ref.top))


def _interpolate(cat, i0, i1, w0, w1):
    return (w0 * cat[i0] + w1 * cat[i1] + 16) >> 5


def predict_angular(ref: RefLine, mode: int, start: int = 0) -> np.ndarray:
    """Angular prediction over the grid ``start..N-1`` in both directions.

    ``start=-1`` yields the ``(N+1) x (N+1)`` block anchored one sample up
    and left, whose first row and column fall on the positions of ``L_0``.
    """
    i0, i1, w0, w1 = _grid_lookup(ref.size, ref.line, mode, start)
    return _interpolate(_main_side(ref, mode), i0, i1, w0, w1)


def _dc_value(ref: RefLine) -> int:
    n, m = ref.size, ref.line
    total = int(ref.top[m + 1:m + 1 + n].sum()) + int(ref.left[m:m + n].sum())
    return (total + n) // (2 * n)


def predict_dc(ref: RefLine, start: int = 0) -> np.ndarray:
    """Rounded mean of the N samples of the line directly above and the N directly left."""
    n = ref.size - start
    return np.full((n, n), _dc_value(ref), dtype=np.int64)


def _planar_at(ref: RefLine, xs, ys):
    n, m = ref.size, ref.line
    bottom_left = int(ref.left_at(n))
    top_right = int(ref.top_at(n))
    p_v = (n - ys - 1) * ref.top_at(xs) + (ys + m + 1) * bottom_left
    p_h = (n - xs - 1) * ref.left_at(ys) + (xs + m + 1) * top_right
    return (p_v + p_h + n + m) // (2 * (n + m))


@lru_cache(maxsize=None)
def _grid(size: int, start: int):
    span = np.arange(start, size)
    ys, xs = np.meshgrid(span, span, indexing="ij")
    ys.flags.writeable = False
    xs.flags.writeable = False
    return xs, ys


def predict_planar(ref: RefLine, start: int = 0) -> np.ndarray:
    """Bilinear blend of a vertical and a horizontal ramp, weights summing to 2(N+M)."""
    xs, ys = _grid(ref.size, start)
    return _planar_at(ref, xs, ys)


def _post_filter(ref: RefLine, mode: int, pred: np.ndarray) -> np.ndarray:
    top = ref.top[1:ref.size + 1]
    left = ref.left[:ref.size]
    corner = int(ref.top[0])
    max_val = (1 << ref.bit_depth) - 1
    pred = pred.copy()
    if mode == DC:
        dc = int(pred[0, 0])
        pred[0, 0] = (int(left[0]) + 2 * dc + int(top[0]) + 2) >> 2
        pred[0, 1:] = (top[1:] + 3 * dc + 2) >> 2
        pred[1:, 0] = (left[1:] + 3 * dc + 2) >> 2
    elif mode == VER:
        pred[:, 0] = np.clip(int(top[0]) + ((left - corner) >> 1), 0, max_val)
    elif mode == HOR:
        pred[0, :] = np.clip(int(left[0]) + ((top - corner) >> 1), 0, max_val)
    return pred


def predict(ref: RefLine, mode: int, is_luma: bool = True) -> np.ndarray:
    """Prediction for ``mode`` from ``ref``.

    For the adjacent line (``M == 0``) on luma blocks below 32x32, the DC,
    pure-horizontal and pure-vertical boundary filters are applied. Further
    lines never get them.
    """
    _check_mode(mode)
    if mode == PLANAR:
        pred = predict_planar(ref)
    elif mode == DC:
        pred = predict_dc(ref)
    else:
        pred = predict_angular(ref, mode)
    if ref.line == 0 and is_luma and ref.size < 32 and mode in (DC, HOR, VER):
        pred = _post_filter(ref, mode, pred)
    return pred


def predict_at(ref: RefLine, mode: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate the (unfiltered) generator for ``mode`` at block-relative coordinates."""
    _check_mode(mode)
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if mode == PLANAR:
        return _planar_at(ref, xs, ys)
    if mode == DC:
        return np.full(xs.shape, _dc_value(ref), dtype=np.int64)
    i0, i1, w0, w1 = _angular_lookup(ref.size, ref.line, mode, xs, ys)
    return _interpolate(_main_side(ref, mode), i0, i1, w0, w1)
