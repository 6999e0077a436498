"""Integer core transforms, flat scalar quantization and residual reconstruction.

The DCT matrices are the HEVC integer approximations (rows of the 32-point
matrix subsampled for smaller sizes); 4x4 luma blocks use the DST-VII
matrix instead. Shifts and clipping follow the HEVC decoding process so the
inverse path is exact integer arithmetic on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError

__all__ = [
    "CoeffBlock",
    "dct_matrix",
    "DST_MATRIX",
    "forward_transform",
    "inverse_transform",
    "quantize",
    "dequantize",
    "reconstruct_residual",
    "quant_step",
    "chroma_qp",
    "INTRA_ROUNDING",
]

TRANSFORM_SIZES = (4, 8, 16, 32)

# |64 * sqrt(2) * cos(j * pi / 64)| as tuned for HEVC, j = 0..32.
_COS_TABLE = (64, 90, 90, 90, 89, 88, 87, 85, 83, 82, 80, 78, 75, 73, 70, 67,
              64, 61, 57, 54, 50, 46, 43, 38, 36, 31, 25, 22, 18, 13, 9, 4, 0)

DST_MATRIX = np.array([[29, 55, 74, 84],
                       [74, 74, 0, -74],
                       [84, -29, -74, 55],
                       [55, -84, 74, -29]], dtype=np.int64)
DST_MATRIX.flags.writeable = False

_QUANT_SCALES = (26214, 23302, 20560, 18396, 16384, 14564)
_DEQUANT_SCALES = (40, 45, 51, 57, 64, 72)
INTRA_ROUNDING = 171   # dead-zone offset in 1/512 of a step
_CHROMA_QP_TABLE = (29, 30, 31, 32, 33, 33, 34, 34, 35, 35, 36, 36, 37, 37)

_INT16_MIN, _INT16_MAX = -32768, 32767


def _cos_entry(m: int) -> int:
    """Signed integer cosine of m*pi/64, any integer m."""
    m %= 128
    if m > 64:
        m = 128 - m
    if m <= 32:
        return _COS_TABLE[m]
    return -_COS_TABLE[64 - m]


@lru_cache(maxsize=None)
def dct_matrix(size: int) -> np.ndarray:
    if size not in TRANSFORM_SIZES:
        raise ConfigError(f"transform size must be one of {TRANSFORM_SIZES}, got {size}")
    step = 32 // size
    mat = np.empty((size, size), dtype=np.int64)
    for k in range(size):
        for n in range(size):
            mat[k, n] = 64 if k == 0 else _cos_entry(k * step * (2 * n + 1))
    mat.flags.writeable = False
    return mat


def _matrix(size: int, use_dst: bool) -> np.ndarray:
    if use_dst:
        if size != 4:
            raise ConfigError("DST is only defined for 4x4 blocks")
        return DST_MATRIX
    return dct_matrix(size)


def _clip16(x: np.ndarray) -> np.ndarray:
    return np.minimum(np.maximum(x, _INT16_MIN), _INT16_MAX)


def _round_shift(x: np.ndarray, shift: int) -> np.ndarray:
    return (x + (1 << (shift - 1))) >> shift


def _log2(size: int) -> int:
    return size.bit_length() - 1


def forward_transform(residual: np.ndarray, use_dst: bool = False, bit_depth: int = 8) -> np.ndarray:
    """Forward 2-D transform of a block or a stack of blocks (last two axes)."""
    residual = np.asarray(residual, dtype=np.int64)
    size = residual.shape[-1]
    mat = _matrix(size, use_dst)
    log2 = _log2(size)
    tmp = _round_shift(residual @ mat.T, log2 + bit_depth - 9)
    return _round_shift(mat @ tmp, log2 + 6)


def inverse_transform(coeffs: np.ndarray, use_dst: bool = False, bit_depth: int = 8) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.int64)
    size = coeffs.shape[-1]
    mat = _matrix(size, use_dst)
    tmp = _clip16(_round_shift(mat.T @ coeffs, 7))
    return _round_shift(tmp @ mat, 20 - bit_depth)


@dataclass(frozen=True)
class CoeffBlock:
    levels: np.ndarray
    qp: int
    is_dst: bool = False
    bit_depth: int = 8

    @property
    def size(self) -> int:
        return self.levels.shape[-1]

    def __post_init__(self):
        if self.is_dst and self.size != 4:
            raise ConfigError("DST blocks must be 4x4")
        _check_qp(self.qp)


def _check_qp(qp: int) -> None:
    if not 0 <= qp <= 51:
        raise ConfigError(f"QP must be in 0..51, got {qp}")


def _qbits(qp: int, size: int, bit_depth: int) -> int:
    return 14 + qp // 6 + (15 - bit_depth - _log2(size))


def quant_step(qp: int, size: int, bit_depth: int = 8) -> float:
    """Quantizer step size in the transform-coefficient domain."""
    return (1 << _qbits(qp, size, bit_depth)) / _QUANT_SCALES[qp % 6]


def quantize(coeffs: np.ndarray, qp: int, use_dst: bool = False, bit_depth: int = 8,
             rounding: int = INTRA_ROUNDING) -> CoeffBlock:
    """Flat dead-zone scalar quantizer; ``rounding`` is the offset in 1/512 step."""
    _check_qp(qp)
    coeffs = np.asarray(coeffs, dtype=np.int64)
    qbits = _qbits(qp, coeffs.shape[-1], bit_depth)
    offset = rounding << (qbits - 9)
    mag = (np.abs(coeffs) * _QUANT_SCALES[qp % 6] + offset) >> qbits
    levels = np.sign(coeffs) * np.minimum(mag, _INT16_MAX)
    return CoeffBlock(levels, qp, use_dst, bit_depth)


def dequantize(block: CoeffBlock) -> np.ndarray:
    shift = block.bit_depth + _log2(block.size) - 5
    scaled = (block.levels.astype(np.int64) * (16 * _DEQUANT_SCALES[block.qp % 6])) << (block.qp // 6)
    return _clip16(_round_shift(scaled, shift))


def reconstruct_residual(block: CoeffBlock) -> np.ndarray:
    """Dequantize and inverse transform; the result is clipped to signed 16 bit."""
    if not block.levels.any():
        return np.zeros(block.levels.shape, dtype=np.int64)
    res = inverse_transform(dequantize(block), block.is_dst, block.bit_depth)
    return _clip16(res)


def chroma_qp(qp: int) -> int:
    """Map a luma QP to the chroma QP (4:2:0 table)."""
    if qp < 30:
        return qp
    if qp > 43:
        return qp - 6
    return _CHROMA_QP_TABLE[qp - 30]
