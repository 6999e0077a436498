"""Coding state and the prediction/reconstruction path shared by encoder and decoder.

Both drivers build predictions through :class:`BlockPredictor` and
reconstruct through :func:`reconstruct_block`, so the encoder's loop and
the decoder can only diverge if the parsed syntax differs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bitstream import (FLAG_ALLOW_NXN, FLAG_HORIZONTAL_TO_30, FLAG_NO_BLEND,
                        FLAG_NO_COMPENSATION, derive_mpm, encode_levels, encode_line_index,
                        encode_mode, line_alphabet)
from .batched import ALL_MODES, compensate_modes, predict_modes, ring_predictions
from .compensation import read_interval
from .errors import ConfigError
from .prediction import DC, predict
from .reference import force_smooth, gather_reference_line
from .transform import forward_transform, quantize, reconstruct_residual, CoeffBlock

__all__ = [
    "CodingTools",
    "CodingState",
    "BlockPredictor",
    "CuSyntax",
    "chroma_line",
    "code_block",
    "reconstruct_block",
    "luma_tus",
    "write_cu_leaf",
    "CTU_SIZE",
]

CTU_SIZE = 64
PART_2NX2N = "2Nx2N"
PART_NXN = "NxN"


@dataclass(frozen=True)
class CodingTools:
    """Normative tool settings; everything here travels in the stream header."""

    lines: tuple[int, ...] = (0, 1, 2, 3)
    compensation: bool = True
    blending: bool = True
    horizontal_to_30: bool = False
    allow_nxn: bool = True
    min_cu: int = 8
    max_cu: int = 64

    def __post_init__(self):
        object.__setattr__(self, "lines", line_alphabet(self.lines))
        sizes = (8, 16, 32, 64)
        if self.min_cu not in sizes or self.max_cu not in sizes or self.min_cu > self.max_cu:
            raise ConfigError(f"invalid CU size range {self.min_cu}..{self.max_cu}")

    @property
    def flags(self) -> int:
        return ((FLAG_HORIZONTAL_TO_30 if self.horizontal_to_30 else 0)
                | (0 if self.compensation else FLAG_NO_COMPENSATION)
                | (0 if self.blending else FLAG_NO_BLEND)
                | (FLAG_ALLOW_NXN if self.allow_nxn else 0))

    @property
    def nxn_enabled(self) -> bool:
        return self.allow_nxn and self.min_cu == 8

    @classmethod
    def from_header(cls, header) -> "CodingTools":
        f = header.flags
        return cls(lines=header.lines,
                   compensation=not f & FLAG_NO_COMPENSATION,
                   blending=not f & FLAG_NO_BLEND,
                   horizontal_to_30=bool(f & FLAG_HORIZONTAL_TO_30),
                   allow_nxn=bool(f & FLAG_ALLOW_NXN),
                   min_cu=1 << header.log2_min_cu, max_cu=1 << header.log2_max_cu)


def chroma_line(line: int) -> int:
    """Chroma reuses the luma line halved: L0/L1 -> L0, L2/L3 -> L1."""
    return 0 if line < 2 else 1


class CodingState:
    """Reconstruction planes, availability masks and the luma PU mode/size maps."""

    def __init__(self, width: int, height: int, bit_depth: int, tools: CodingTools):
        self.width, self.height = width, height
        self.bit_depth = bit_depth
        self.tools = tools
        shapes = [(height, width), (height // 2, width // 2), (height // 2, width // 2)]
        self.recon = [np.zeros(s, dtype=np.int64) for s in shapes]
        self.avail = [np.zeros(s, dtype=bool) for s in shapes]
        self.modes = np.full((height // 4, width // 4), -1, dtype=np.int16)
        self.pu_size = np.zeros((height // 4, width // 4), dtype=np.int16)
        # L0 prediction stacks keyed by the padded reference samples they depend on
        self.prediction_cache: dict = {}

    def _slices(self, x, y, size):
        c = size // 2
        return ((slice(y, y + size), slice(x, x + size)),
                (slice(y // 2, y // 2 + c), slice(x // 2, x // 2 + c)),
                (slice(y // 4, (y + size) // 4), slice(x // 4, (x + size) // 4)))

    def snapshot(self, x: int, y: int, size: int):
        luma, chroma, grid = self._slices(x, y, size)
        return (x, y, size,
                [self.recon[0][luma].copy(), self.recon[1][chroma].copy(), self.recon[2][chroma].copy()],
                [self.avail[0][luma].copy(), self.avail[1][chroma].copy(), self.avail[2][chroma].copy()],
                self.modes[grid].copy(), self.pu_size[grid].copy())

    def restore(self, snap) -> None:
        x, y, size, recon, avail, modes, pu = snap
        luma, chroma, grid = self._slices(x, y, size)
        for i, sl in enumerate((luma, chroma, chroma)):
            self.recon[i][sl] = recon[i]
            self.avail[i][sl] = avail[i]
        self.modes[grid] = modes
        self.pu_size[grid] = pu

    def store(self, plane: int, x: int, y: int, block: np.ndarray) -> None:
        n = block.shape[0]
        self.recon[plane][y:y + n, x:x + n] = block
        self.avail[plane][y:y + n, x:x + n] = True

    def set_pu(self, x: int, y: int, size: int, mode: int) -> None:
        self.modes[y // 4:(y + size) // 4, x // 4:(x + size) // 4] = mode
        self.pu_size[y // 4:(y + size) // 4, x // 4:(x + size) // 4] = size

    def _neighbour(self, grid: np.ndarray, x: int, y: int, missing: int) -> int:
        if x < 0 or y < 0:
            return missing
        v = int(grid[y // 4, x // 4])
        return missing if self.modes[y // 4, x // 4] < 0 else v

    def mpm(self, x: int, y: int) -> tuple[int, int, int]:
        left = self._neighbour(self.modes, x - 1, y, DC)
        # the above PU only counts inside the current CTU row
        above = DC if y % CTU_SIZE == 0 else self._neighbour(self.modes, x, y - 1, DC)
        return derive_mpm(left, above)

    def neighbour_pu_sizes(self, x: int, y: int) -> tuple[int, int]:
        """Sizes of the PUs left of and above ``(x, y)``; 0 when unavailable."""
        return (self._neighbour(self.pu_size, x - 1, y, 0),
                self._neighbour(self.pu_size, x, y - 1, 0))


class BlockPredictor:
    """Predictions of one block from one line, given the current reconstruction.

    For a further line the pipeline is: predict from ``L_M``, compensate the
    boundary with the interval residue, blend 3:1 with the ``L_0`` prediction.
    Predictions are cached, so the caller must not change the reconstruction
    around the block while the object is in use.
    """

    def __init__(self, state: CodingState, plane: int, x: int, y: int, size: int, line: int):
        self.state = state
        self.plane = plane
        self.x, self.y, self.size, self.line = x, y, size, line
        self.is_luma = plane == 0
        recon, avail = state.recon[plane], state.avail[plane]
        self.ref = gather_reference_line(recon, x, y, size, line, avail, state.bit_depth)
        self.smoothed = force_smooth(self.ref) if self.is_luma and size > 4 else self.ref
        self._all = None
        self._cache = {}
        tools = state.tools
        self.near = None
        self.interval = None
        if line > 0:
            if tools.blending:
                self.near = BlockPredictor(state, plane, x, y, size, 0)
            if tools.compensation:
                (top, top_ok), (left, left_ok) = read_interval(recon, x, y, size, avail)
                self.interval = (np.concatenate((top, left)), np.concatenate((top_ok, left_ok)))

    def predict_modes(self, modes) -> np.ndarray:
        preds = predict_modes(self.ref, self.smoothed, modes, self.is_luma)
        if self.line > 0:
            tools = self.state.tools
            if self.interval is not None:
                ring = ring_predictions(self.ref, self.smoothed, modes, self.is_luma)
                preds = compensate_modes(preds, modes, ring, *self.interval, self.state.bit_depth,
                                         tools.horizontal_to_30)
            if self.near is not None:
                near = self.near.predict_all()[list(modes)] if len(modes) == len(ALL_MODES) \
                    else self.near.predict_modes(modes)
                preds = (3 * preds + near + 2) >> 2
        return preds

    def predict_all(self) -> np.ndarray:
        """Stack of all 35 predictions, mode index first."""
        if self._all is None:
            if self.line == 0:
                key = (self.plane, self.size, self.ref.top.tobytes(), self.ref.left.tobytes())
                cache = self.state.prediction_cache
                if key not in cache:
                    cache[key] = self.predict_modes(ALL_MODES)
                self._all = cache[key]
            else:
                self._all = self.predict_modes(ALL_MODES)
        return self._all

    def predict(self, mode: int) -> np.ndarray:
        if self._all is not None:
            return self._all[mode]
        cached = self._cache.get(mode)
        if cached is None:
            cached = self._cache[mode] = self.predict_modes((mode,))[0]
        return cached


def code_block(orig: np.ndarray, pred: np.ndarray, qp: int, bit_depth: int, lossless: bool,
               use_dst: bool) -> tuple[np.ndarray, np.ndarray]:
    """Residual coding of one transform block: returns (levels, reconstruction)."""
    residual = orig - pred
    if lossless:
        levels = residual
    else:
        coeffs = forward_transform(residual, use_dst, bit_depth)
        levels = quantize(coeffs, qp, use_dst, bit_depth).levels
    return levels, reconstruct_block(pred, levels, qp, bit_depth, lossless, use_dst)


def reconstruct_block(pred: np.ndarray, levels: np.ndarray, qp: int, bit_depth: int,
                      lossless: bool, use_dst: bool) -> np.ndarray:
    if lossless:
        residual = levels
    else:
        residual = reconstruct_residual(CoeffBlock(levels, qp, use_dst, bit_depth))
    return np.minimum(np.maximum(pred + residual, 0), (1 << bit_depth) - 1)


def luma_tus(x: int, y: int, size: int, part: str) -> list[tuple[int, int, int, int]]:
    """Luma transform blocks of a CU in z-order as (x, y, size, pu_index)."""
    if part == PART_NXN:
        h = size // 2
        return [(x, y, h, 0), (x + h, y, h, 1), (x, y + h, h, 2), (x + h, y + h, h, 3)]
    if size == 64:
        return [(x, y, 32, 0), (x + 32, y, 32, 0), (x, y + 32, 32, 0), (x + 32, y + 32, 32, 0)]
    return [(x, y, size, 0)]


@dataclass
class CuSyntax:
    """Syntax of one leaf CU: line, partition, PU modes (with their MPM lists) and levels.

    ``levels`` holds the luma blocks in z-order followed by Cb and Cr.
    """

    x: int
    y: int
    size: int
    line: int
    part: str
    modes: tuple[int, ...]
    mpms: tuple[tuple[int, int, int], ...]
    levels: list = field(default_factory=list)


def write_cu_leaf(writer, cu: CuSyntax, tools: CodingTools) -> None:
    encode_line_index(cu.line, tools.lines, writer)
    if cu.size == 8 and tools.nxn_enabled:
        writer.write(1 if cu.part == PART_NXN else 0, 1)
    for mode, mpm in zip(cu.modes, cu.mpms):
        encode_mode(mode, mpm, writer)
    for levels in cu.levels:
        encode_levels(levels, writer)
