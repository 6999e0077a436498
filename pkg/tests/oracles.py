"""Independent reference implementations used only by the tests.

They are written sample by sample from the textbook definitions and share
no code with the package.
"""

from __future__ import annotations

import math

import numpy as np

ANGLES = {2: 32, 3: 26, 4: 21, 5: 17, 6: 13, 7: 9, 8: 5, 9: 2, 10: 0, 11: -2, 12: -5, 13: -9,
          14: -13, 15: -17, 16: -21, 17: -26, 18: -32, 19: -26, 20: -21, 21: -17, 22: -13,
          23: -9, 24: -5, 25: -2, 26: 0, 27: 2, 28: 5, 29: 9, 30: 13, 31: 17, 32: 21, 33: 26,
          34: 32}
INV_ANGLES = {-32: -256, -26: -315, -21: -390, -17: -482, -13: -630, -9: -910, -5: -1638,
              -2: -4096}


def hevc_intra(p: dict, n: int, mode: int, bit_depth: int = 8, edge_filters: bool = True):
    """HEVC intra prediction of an ``n x n`` block from neighbours ``p[(x, y)]``.

    ``p`` holds ``(-1, -1 .. 2n-1)`` and ``(-1 .. 2n-1, -1)``; no reference
    smoothing is applied here. ``edge_filters`` enables the DC, pure
    horizontal and pure vertical boundary filters (luma below 32x32).
    """
    pred = [[0] * n for _ in range(n)]     # pred[y][x]
    log2n = int(math.log2(n))
    top_max = (1 << bit_depth) - 1
    if mode == 0:
        for y in range(n):
            for x in range(n):
                pred[y][x] = ((n - 1 - x) * p[(-1, y)] + (x + 1) * p[(n, -1)]
                              + (n - 1 - y) * p[(x, -1)] + (y + 1) * p[(-1, n)] + n) >> (log2n + 1)
    elif mode == 1:
        dc = (sum(p[(x, -1)] for x in range(n)) + sum(p[(-1, y)] for y in range(n)) + n) >> (log2n + 1)
        for y in range(n):
            for x in range(n):
                pred[y][x] = dc
        if edge_filters and n < 32:
            pred[0][0] = (p[(-1, 0)] + 2 * dc + p[(0, -1)] + 2) >> 2
            for x in range(1, n):
                pred[0][x] = (p[(x, -1)] + 3 * dc + 2) >> 2
            for y in range(1, n):
                pred[y][0] = (p[(-1, y)] + 3 * dc + 2) >> 2
    else:
        angle = ANGLES[mode]
        vertical = mode >= 18
        # main reference along the predicted direction, side reference for projection
        if vertical:
            main = lambda k: p[(-1 + k, -1)]       # noqa: E731
            side = lambda k: p[(-1, -1 + k)]       # noqa: E731
        else:
            main = lambda k: p[(-1, -1 + k)]       # noqa: E731
            side = lambda k: p[(-1 + k, -1)]       # noqa: E731
        ref = {k: main(k) for k in range(0, n + 1)}
        if angle < 0:
            if (n * angle) >> 5 < -1:
                inv = INV_ANGLES[angle]
                for k in range((n * angle) >> 5, 0):
                    ref[k] = side((k * inv + 128) >> 8)
        else:
            for k in range(n + 1, 2 * n + 1):
                ref[k] = main(k)
        for y in range(n):
            for x in range(n):
                u, v = (x, y) if vertical else (y, x)
                idx = ((v + 1) * angle) >> 5
                frac = ((v + 1) * angle) & 31
                if frac:
                    val = ((32 - frac) * ref[u + idx + 1] + frac * ref[u + idx + 2] + 16) >> 5
                else:
                    val = ref[u + idx + 1]
                if vertical:
                    pred[v][u] = val
                else:
                    pred[u][v] = val
        if edge_filters and n < 32 and mode in (10, 26):
            for k in range(n):
                if mode == 26:
                    pred[k][0] = min(max(p[(0, -1)] + ((p[(-1, k)] - p[(-1, -1)]) >> 1), 0), top_max)
                else:
                    pred[0][k] = min(max(p[(-1, 0)] + ((p[(k, -1)] - p[(-1, -1)]) >> 1), 0), top_max)
    return np.array(pred, dtype=np.int64)


def neighbours_from_arrays(top: np.ndarray, left: np.ndarray) -> dict:
    """``top`` = corner then ``2n`` samples rightwards, ``left`` = ``2n`` samples downwards."""
    p = {(x - 1, -1): int(v) for x, v in enumerate(top)}
    p.update({(-1, y): int(v) for y, v in enumerate(left)})
    return p


def dct_basis(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix, rows are basis functions."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    c[0] /= math.sqrt(2.0)
    return c


def dst7_basis(n: int = 4) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    return 2.0 / math.sqrt(2 * n + 1) * np.sin(np.pi * (2 * k + 1) * (i + 1) / (2 * n + 1))


def float_forward(residual: np.ndarray, use_dst: bool, bit_depth: int = 8) -> np.ndarray:
    """Separable float transform with the integer transform's overall gain ``2**(15-bd-log2 n)``."""
    n = residual.shape[0]
    basis = dst7_basis(n) if use_dst else dct_basis(n)
    gain = 2.0 ** (15 - bit_depth - int(math.log2(n)))
    return gain * basis @ residual @ basis.T


def bd_rate_oracle(r1, q1, r2, q2, samples: int = 20001) -> float:
    """BD-rate by dense trapezoidal integration of cubic fits (checks the closed form)."""
    f1 = np.polyfit(q1, np.log(r1), 3)
    f2 = np.polyfit(q2, np.log(r2), 3)
    lo, hi = max(min(q1), min(q2)), min(max(q1), max(q2))
    grid = np.linspace(lo, hi, samples)
    d = np.polyval(f2, grid) - np.polyval(f1, grid)
    avg = float(np.sum((d[1:] + d[:-1]) / 2 * np.diff(grid)) / (hi - lo))
    return (math.exp(avg) - 1) * 100
