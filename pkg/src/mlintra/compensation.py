"""Residue compensation for predictions taken from a further reference line.

The interval between a further line and the block is predicted with the
same generator as the block itself. Where the adjacent line ``L_0`` is
already reconstructed, ``reconstruction - prediction`` estimates the
residue the block boundary will have, and a weighted share of it is added
to the first one to three rows and/or columns. The calibrated prediction
is finally blended 3:1 with the ordinary ``L_0`` prediction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .prediction import (HOR, VER, angle_of_mode, inverse_angle, is_vertical_mode,
                         predict_angular, predict_at, predict_dc, predict_planar)
from .reference import RefLine

__all__ = [
    "CompensationType",
    "ResidueLine",
    "IntervalPrediction",
    "compensation_type_for_mode",
    "directional_weight",
    "distance_weight",
    "extended_prediction",
    "interval_prediction",
    "compute_interval_residue",
    "read_interval",
    "compensate",
    "blend_with_nearest",
    "RING_EXTRA",
]

COMPENSATED_LINES = 3     # rows/columns touched by the three-line types
WEIGHT_A, WEIGHT_B = 3, 4
RING_EXTRA = 3            # ring reaches N+2 so diagonal types can look past the block


class CompensationType(str, enum.Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    BOTH_SIDE = "both_side"
    PARALLEL = "parallel"
    BI_DIRECTIONAL = "bi_directional"
    NONE = "none"


def compensation_type_for_mode(mode: int, horizontal_to_30: bool = False) -> CompensationType:
    """Compensation strategy per intra mode.

    Modes 3-6 and 30-33 are not compensated. ``horizontal_to_30`` extends the
    horizontal type to mode 30.
    """
    if not 0 <= mode <= 34:
        raise ConfigError(f"intra mode must be in 0..34, got {mode}")
    if mode in (0, 1):
        return CompensationType.BOTH_SIDE
    if 7 <= mode <= 13:
        return CompensationType.VERTICAL
    if 14 <= mode <= 22:
        return CompensationType.PARALLEL
    if 23 <= mode <= (30 if horizontal_to_30 else 29):
        return CompensationType.HORIZONTAL
    if mode in (2, 34):
        return CompensationType.BI_DIRECTIONAL
    return CompensationType.NONE


def directional_weight(mode: int) -> int:
    """Numerator over 64 of the single-line weight: ``(14 - |dir - axis|) * 3``.

    The axis is pure horizontal for the vertical type, pure vertical for the
    horizontal type.
    """
    axis = HOR if mode <= 17 else VER
    return (14 - abs(mode - axis)) * 3


def distance_weight(k: int) -> tuple[int, int]:
    """Weight of the k-th compensated row/column as (numerator, denominator)."""
    return WEIGHT_A - k, WEIGHT_B


@dataclass(frozen=True)
class IntervalPrediction:
    """Predicted values on ``L_0``: ``top[i]`` is at ``(i-1, -1)``, ``left[i]`` at ``(-1, i-1)``."""

    top: np.ndarray
    left: np.ndarray


@dataclass(frozen=True)
class ResidueLine:
    """Reconstruction and prediction on ``L_0``, indexed like :class:`IntervalPrediction`.

    Positions whose reconstruction is unavailable hold ``recon == pred`` so
    their residue is zero.
    """

    top_recon: np.ndarray
    top_pred: np.ndarray
    left_recon: np.ndarray
    left_pred: np.ndarray

    @property
    def top(self) -> np.ndarray:
        return self.top_recon - self.top_pred

    @property
    def left(self) -> np.ndarray:
        return self.left_recon - self.left_pred

    def transposed(self) -> "ResidueLine":
        return ResidueLine(self.left_recon, self.left_pred, self.top_recon, self.top_pred)


def extended_prediction(ref: RefLine, mode: int) -> np.ndarray:
    """``(N+1) x (N+1)`` prediction anchored at ``(-1, -1)`` from a further line.

    Row and column 0 of the result lie on ``L_0``. The interior equals the
    ordinary prediction of the block.
    """
    if ref.line < 1:
        raise ConfigError("extended prediction needs a further line (M >= 1)")
    if mode == 0:
        return predict_planar(ref, start=-1)
    if mode == 1:
        return predict_dc(ref, start=-1)
    return predict_angular(ref, mode, start=-1)


@lru_cache(maxsize=None)
def _ring_coords(size: int):
    span = np.arange(-1, size + RING_EXTRA)
    minus = np.full(span.size, -1)
    return span, minus


def interval_prediction(ref: RefLine, mode: int) -> IntervalPrediction:
    """Prediction of ``L_0`` positions ``x, y = -1 .. N+2`` from a further line."""
    span, minus = _ring_coords(ref.size)
    top = predict_at(ref, mode, span, minus)
    left = predict_at(ref, mode, minus, span)
    return IntervalPrediction(top, left)


def read_interval(recon: np.ndarray, x0: int, y0: int, size: int,
                  available: np.ndarray | None = None):
    """``L_0`` reconstruction around block ``(x0, y0)`` at ring positions ``-1 .. N+2``.

    Returns ``((top, top_ok), (left, left_ok))``; the masks flag samples that
    lie inside the plane and are already reconstructed.
    """
    span = np.arange(-1, size + RING_EXTRA)
    h, w = recon.shape

    def read(xs, ys):
        inside = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
        xc = np.clip(xs, 0, w - 1)
        yc = np.clip(ys, 0, h - 1)
        ok = inside if available is None else inside & available[yc, xc]
        return recon[yc, xc].astype(np.int64), ok

    return (read(x0 + span, np.full(span.size, y0 - 1)),
            read(np.full(span.size, x0 - 1), y0 + span))


def compute_interval_residue(recon: np.ndarray, interval: IntervalPrediction,
                             x0: int, y0: int, size: int,
                             available: np.ndarray | None = None) -> ResidueLine:
    """Pair the ``L_0`` reconstruction around block ``(x0, y0)`` with its prediction.

    Unavailable positions (outside the plane or not reconstructed yet) get
    a zero residue.
    """
    (top, top_ok), (left, left_ok) = read_interval(recon, x0, y0, size, available)
    return ResidueLine(np.where(top_ok, top, interval.top), interval.top,
                       np.where(left_ok, left, interval.left), interval.left)


def _weighted(res, k):
    num, den = distance_weight(k)
    return (num * res + den // 2) // den


def _single_line(pred, residue_row, mode):
    out = pred.copy()
    n = pred.shape[1]
    out[0, :] += (directional_weight(mode) * residue_row[1:n + 1] + 32) >> 6
    return out


def _three_line(pred, top_res, left_res):
    out = pred.copy()
    n = pred.shape[0]
    for k in range(COMPENSATED_LINES):
        out[k, :] += _weighted(top_res[1:n + 1], k)
    for k in range(COMPENSATED_LINES):
        out[:, k] += _weighted(left_res[1:n + 1], k)
    return out


def _bi_directional(pred, top_res, left_res):
    out = pred.copy()
    n = pred.shape[0]
    xs = np.arange(n)
    for k in range(COMPENSATED_LINES):
        # row k uses r[x+k+1, -1]; the +1 in the index is the ring offset
        out[k, :] += _weighted(top_res[xs + k + 2], k)
    for k in range(COMPENSATED_LINES):
        out[:, k] += _weighted(left_res[xs + k + 2], k)
    return out


def _interp_line(values, c, z):
    return ((32 - z) * values[c + 1] + z * values[c + 2] + 16) >> 5


def _parallel(pred, residue: ResidueLine, d: int):
    """Compensation along the prediction direction, in vertical-mode orientation."""
    out = pred.copy()
    n = pred.shape[0]
    ys, xs = np.nonzero(np.minimum.outer(np.arange(n), np.arange(n)) < COMPENSATED_LINES)
    pos = 32 * xs + (ys + 1) * d
    on_top = pos >= -32
    res = np.empty(xs.size, dtype=np.int64)

    c, z = pos[on_top] >> 5, pos[on_top] & 31
    res[on_top] = (_interp_line(residue.top_recon, c, z)
                   - _interp_line(residue.top_pred, c, z))

    off = ~on_top
    if off.any():
        # project onto the left column: walk x+1 columns back along the direction
        pos_left = (256 * ys[off] + (xs[off] + 1) * inverse_angle(d) + 4) >> 3
        pos_left = np.maximum(pos_left, -32)
        c, z = pos_left >> 5, pos_left & 31
        res[off] = (_interp_line(residue.left_recon, c, z)
                    - _interp_line(residue.left_pred, c, z))

    k = np.minimum(xs, ys)
    out[ys, xs] += ((WEIGHT_A - k) * res + WEIGHT_B // 2) // WEIGHT_B
    return out


def compensate(pred: np.ndarray, residue: ResidueLine, mode: int, bit_depth: int = 8,
               horizontal_to_30: bool = False) -> np.ndarray:
    """Add weighted interval residues to the boundary of a further-line prediction.

    Rows are compensated before columns wherever both apply. The result is
    clamped to the sample range.
    """
    kind = compensation_type_for_mode(mode, horizontal_to_30)
    pred = np.asarray(pred, dtype=np.int64)
    if kind is CompensationType.NONE:
        return pred
    if kind is CompensationType.VERTICAL:
        out = _single_line(pred, residue.top, mode)
    elif kind is CompensationType.HORIZONTAL:
        out = _single_line(pred.T, residue.left, mode).T
    elif kind is CompensationType.BOTH_SIDE:
        out = _three_line(pred, residue.top, residue.left)
    elif kind is CompensationType.BI_DIRECTIONAL:
        out = _bi_directional(pred, residue.top, residue.left)
    else:
        d = angle_of_mode(mode)
        if is_vertical_mode(mode):
            out = _parallel(pred, residue, d)
        else:
            out = _parallel(pred.T, residue.transposed(), d).T
    return np.clip(out, 0, (1 << bit_depth) - 1)


def blend_with_nearest(pred_far: np.ndarray, pred_near: np.ndarray) -> np.ndarray:
    """Weight the further-line prediction 3/4 and the adjacent-line one 1/4."""
    if np.shape(pred_far) != np.shape(pred_near):
        raise ConfigError(
            f"cannot blend predictions of shape {np.shape(pred_far)} and {np.shape(pred_near)}")
    return (3 * np.asarray(pred_far, dtype=np.int64) + pred_near + 2) >> 2
