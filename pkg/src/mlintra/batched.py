"""Predictions for many modes of one block in a few array operations.

The per-mode functions in :mod:`mlintra.prediction` and
:mod:`mlintra.compensation` are the readable definitions. This module
precomputes, per block size and line, gather tables that reproduce them
for a whole set of modes at once; the codec uses it for speed and the
tests check it against the per-mode path.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .compensation import (COMPENSATED_LINES, RING_EXTRA, WEIGHT_A, WEIGHT_B, CompensationType,
                           compensation_type_for_mode, directional_weight)
from .prediction import (DC, HOR, NUM_MODES, PLANAR, VER, _angular_lookup, _planar_at,
                         _post_filter, angle_of_mode, inverse_angle, is_vertical_mode)
from .reference import RefLine, needs_smoothing

__all__ = ["predict_modes", "ring_predictions", "compensate_modes", "ALL_MODES"]

ALL_MODES = tuple(range(NUM_MODES))


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False
    return arrays


@lru_cache(maxsize=None)
def _angular_tables(size: int, line: int, is_luma: bool, ring: bool):
    """Two-tap gather tables for modes 2..34 over ``concat(raw, smoothed)``.

    Each half is ``concat(top, left_with_corner)``, both of length
    ``2(N+M)+1``. With ``ring`` the positions are the ``L_0`` ring
    (top then left, ``N+4`` each), otherwise the block in raster order.
    """
    length = 2 * (size + line) + 1
    if ring:
        span = np.arange(-1, size + RING_EXTRA)
        xs = np.concatenate((span, np.full(span.size, -1)))
        ys = np.concatenate((np.full(span.size, -1), span))
    else:
        ys, xs = np.divmod(np.arange(size * size), size)
    i0s, i1s, w0s, w1s = [], [], [], []
    for mode in range(2, NUM_MODES):
        i0, i1, w0, w1 = _angular_lookup(size, line, mode, xs, ys)
        if not is_vertical_mode(mode):
            # lookup indexes concat(left, top); remap onto concat(top, left)
            i0 = np.where(i0 < length, i0 + length, i0 - length)
            i1 = np.where(i1 < length, i1 + length, i1 - length)
        if needs_smoothing(size, mode, is_luma):
            i0, i1 = i0 + 2 * length, i1 + 2 * length
        i0s.append(i0)
        i1s.append(i1)
        w0s.append(np.broadcast_to(w0, i0.shape))
        w1s.append(np.broadcast_to(w1, i0.shape))
    return _freeze(np.stack(i0s), np.stack(i1s), np.stack(w0s).astype(np.int64),
                   np.stack(w1s).astype(np.int64))


def _values(ref: RefLine, smoothed: RefLine) -> np.ndarray:
    return np.concatenate((ref.top, ref.left_with_corner,
                           smoothed.top, smoothed.left_with_corner)).astype(np.int64)


def _dc_value(ref: RefLine) -> int:
    n, m = ref.size, ref.line
    total = int(ref.top[m + 1:m + 1 + n].sum()) + int(ref.left[m:m + n].sum())
    return (total + n) // (2 * n)


@lru_cache(maxsize=None)
def _ring_coords(size: int):
    span = np.arange(-1, size + RING_EXTRA)
    return _freeze(np.concatenate((span, np.full(span.size, -1))),
                   np.concatenate((np.full(span.size, -1), span)))


def _evaluate(ref, smoothed, modes, is_luma, ring):
    n = ref.size
    width = 2 * (n + RING_EXTRA + 1) if ring else n * n
    out = np.empty((len(modes), width), dtype=np.int64)
    modes = np.asarray(modes)
    ang = modes >= 2
    if ang.any():
        i0, i1, w0, w1 = _angular_tables(n, ref.line, is_luma, ring)
        sel = modes[ang] - 2
        v = _values(ref, smoothed)
        out[ang] = (w0[sel] * v[i0[sel]] + w1[sel] * v[i1[sel]] + 16) >> 5
    for k in np.flatnonzero(~ang):
        mode = int(modes[k])
        if mode == DC:
            out[k] = _dc_value(ref)
        else:
            src = smoothed if needs_smoothing(n, PLANAR, is_luma) else ref
            if ring:
                xs, ys = _ring_coords(n)
            else:
                ys, xs = np.divmod(np.arange(n * n), n)
            out[k] = _planar_at(src, xs, ys)
    return out


def predict_modes(ref: RefLine, smoothed: RefLine, modes, is_luma: bool = True) -> np.ndarray:
    """Predictions ``(len(modes), N, N)`` equal to :func:`mlintra.prediction.predict`.

    ``smoothed`` is the [1 2 1]-filtered version of ``ref``; each mode
    picks the raw or filtered samples by the usual size/mode rule.
    """
    n = ref.size
    preds = _evaluate(ref, smoothed, modes, is_luma, ring=False).reshape(len(modes), n, n)
    if ref.line == 0 and is_luma and n < 32:
        for k, mode in enumerate(modes):
            if mode in (DC, HOR, VER):
                preds[k] = _post_filter(ref, mode, preds[k])
    return preds


def ring_predictions(ref: RefLine, smoothed: RefLine, modes, is_luma: bool = True) -> np.ndarray:
    """Unfiltered predictions of the ``L_0`` ring, top half then left half (``N+4`` each)."""
    return _evaluate(ref, smoothed, modes, is_luma, ring=True)


@lru_cache(maxsize=None)
def _compensation_table(size: int, mode: int, horizontal_to_30: bool):
    """Contributions ``(target, ring index, fraction, numerator, shift)`` for one mode.

    Ring index ``i`` addresses ``concat(top_ring, left_ring)``; ring entry
    ``j`` of either half lies at position ``j - 1``. Each contribution adds
    ``(num * residue + 2**(shift-1)) >> shift`` where the residue is the
    two-tap interpolation at ``i, i+1`` with weight ``fraction / 32``.
    """
    kind = compensation_type_for_mode(mode, horizontal_to_30)
    half = size + RING_EXTRA + 1
    n = size
    tgt, idx, frac, num, shift = [], [], [], [], []

    def add(t, i, z, a, s):
        tgt.append(np.asarray(t).ravel())
        idx.append(np.asarray(i).ravel())
        frac.append(np.broadcast_to(z, np.shape(t)).ravel())
        num.append(np.broadcast_to(a, np.shape(t)).ravel())
        shift.append(np.broadcast_to(s, np.shape(t)).ravel())

    xs = np.arange(n)
    if kind is CompensationType.VERTICAL:
        add(xs, xs + 1, 0, directional_weight(mode), 6)
    elif kind is CompensationType.HORIZONTAL:
        add(xs * n, half + xs + 1, 0, directional_weight(mode), 6)
    elif kind is CompensationType.BOTH_SIDE:
        for k in range(COMPENSATED_LINES):
            add(k * n + xs, xs + 1, 0, WEIGHT_A - k, 2)
        for k in range(COMPENSATED_LINES):
            add(xs * n + k, half + xs + 1, 0, WEIGHT_A - k, 2)
    elif kind is CompensationType.BI_DIRECTIONAL:
        for k in range(COMPENSATED_LINES):
            add(k * n + xs, xs + k + 2, 0, WEIGHT_A - k, 2)
        for k in range(COMPENSATED_LINES):
            add(xs * n + k, half + xs + k + 2, 0, WEIGHT_A - k, 2)
    elif kind is CompensationType.PARALLEL:
        d = angle_of_mode(mode)
        vertical = is_vertical_mode(mode)
        ys, xs2 = np.nonzero(np.minimum.outer(np.arange(n), np.arange(n)) < COMPENSATED_LINES)
        pos = 32 * xs2 + (ys + 1) * d
        on_main = pos >= -32
        pos_side = np.maximum((256 * ys + (xs2 + 1) * inverse_angle(d) + 4) >> 3, -32)
        p = np.where(on_main, pos, pos_side)
        main, side = (0, half) if vertical else (half, 0)
        i = np.where(on_main, main, side) + (p >> 5) + 1
        t = ys * n + xs2 if vertical else xs2 * n + ys
        add(t, i, p & 31, WEIGHT_A - np.minimum(xs2, ys), 2)
    if not tgt:
        return None
    return _freeze(*(np.concatenate(a).astype(np.int64) for a in (tgt, idx, frac, num, shift)))


def compensate_modes(preds: np.ndarray, modes, ring_pred: np.ndarray, ring_recon: np.ndarray,
                     ring_ok: np.ndarray, bit_depth: int, horizontal_to_30: bool = False) -> np.ndarray:
    """Batched :func:`mlintra.compensation.compensate` over a stack of predictions.

    ``ring_pred`` holds each mode's ring prediction, ``ring_recon`` and
    ``ring_ok`` the shared ``L_0`` reconstruction and its availability.
    """
    k, n, _ = preds.shape
    rows, tables = [], []
    for r, mode in enumerate(modes):
        table = _compensation_table(n, int(mode), horizontal_to_30)
        if table is not None:
            rows.append(np.full(table[0].size, r))
            tables.append(table)
    if not tables:
        return preds
    row = np.concatenate(rows)
    tgt, idx, frac, num, shift = (np.concatenate(c) for c in zip(*tables))
    recon = np.where(ring_ok, ring_recon, ring_pred)
    last = ring_pred.shape[1] - 1
    i1 = np.minimum(idx + 1, last)

    def interp(values):
        return ((32 - frac) * values[row, idx] + frac * values[row, i1] + 16) >> 5

    res = interp(recon) - interp(ring_pred)
    contrib = (num * res + (1 << (shift - 1))) >> shift
    corr = np.bincount(row * n * n + tgt, weights=contrib, minlength=k * n * n)
    touched = np.zeros(k, dtype=bool)
    touched[row] = True
    out = preds.copy()
    out[touched] = np.clip(preds[touched] + corr.reshape(k, n, n)[touched].astype(np.int64),
                           0, (1 << bit_depth) - 1)
    return out
