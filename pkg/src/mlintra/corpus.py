"""Test content: seeded synthetic generators and a few committed natural crops.

The natural crops are 128x128 8-bit 4:2:0 files in ``mlintra/data``; the
64x64 variants are their centres. ``scripts/build_corpus_data.py``
regenerates the files from scikit-image's sample images.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .errors import ConfigError
from .frame import Frame, crop_frame, load_yuv

__all__ = [
    "rgb_to_yuv420",
    "directional_grating",
    "smooth_ramp",
    "noisy_grating",
    "natural_frame",
    "NATURAL_TEXTURED",
    "NATURAL_SMOOTH",
    "codec_corpus",
    "census_corpus",
    "smooth_corpus",
]

NATURAL_TEXTURED = ("astronaut", "coffee", "chelsea", "rocket")
NATURAL_SMOOTH = ("sky", "cup")
_STORED_SIZE = 128


def rgb_to_yuv420(rgb: np.ndarray, bit_depth: int = 8) -> Frame:
    """BT.601 studio-range conversion with 2x2 chroma averaging."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] < 3:
        raise ConfigError(f"expected an H x W x 3 image, got shape {rgb.shape}")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 16 + (65.481 * r + 128.553 * g + 24.966 * b) / 255
    cb = 128 + (-37.797 * r - 74.203 * g + 112.0 * b) / 255
    cr = 128 + (112.0 * r - 93.786 * g - 18.214 * b) / 255
    h, w = y.shape
    h, w = h - h % 2, w - w % 2
    scale = 1 << (bit_depth - 8)

    def down(c):
        c = c[:h, :w]
        return (c[0::2, 0::2] + c[1::2, 0::2] + c[0::2, 1::2] + c[1::2, 1::2]) / 4

    def quant(p):
        return np.clip(np.round(p * scale), 0, (1 << bit_depth) - 1).astype(np.uint16)

    return Frame.from_planes(quant(y[:h, :w]), quant(down(cb)), quant(down(cr)), bit_depth)


def _grid(width, height):
    return np.mgrid[0:height, 0:width].astype(np.float64)


def _flat_chroma(width, height, luma, bit_depth):
    mid = 1 << (bit_depth - 1)
    small = luma[0::2, 0::2].astype(np.float64)
    # weak luma-correlated chroma keeps the chroma planes non-trivial
    cb = np.clip(np.round(mid + (small - mid) * 0.15), 0, (1 << bit_depth) - 1)
    cr = np.clip(np.round(mid - (small - mid) * 0.10), 0, (1 << bit_depth) - 1)
    return cb.astype(np.uint16), cr.astype(np.uint16)


def _frame(luma: np.ndarray, bit_depth: int) -> Frame:
    luma = np.clip(np.round(luma), 0, (1 << bit_depth) - 1).astype(np.uint16)
    h, w = luma.shape
    cb, cr = _flat_chroma(w, h, luma, bit_depth)
    return Frame.from_planes(luma, cb, cr, bit_depth)


def directional_grating(width: int, height: int, angle: float = 30.0, period: float = 9.0,
                        amplitude: float = 70.0, bit_depth: int = 8) -> Frame:
    """Sinusoidal stripes whose wavefronts run at ``angle`` degrees from horizontal."""
    ys, xs = _grid(width, height)
    theta = np.deg2rad(angle)
    phase = (-xs * np.sin(theta) + ys * np.cos(theta)) * 2 * np.pi / period
    scale = 1 << (bit_depth - 8)
    return _frame((128 + amplitude * np.sin(phase)) * scale, bit_depth)


def smooth_ramp(width: int, height: int, seed: int = 0, bit_depth: int = 8) -> Frame:
    """Planar gradient plus one low-frequency bump; seeded orientation and slope."""
    rng = np.random.default_rng(seed)
    ys, xs = _grid(width, height)
    gx, gy = rng.uniform(-1.2, 1.2, 2)
    cx, cy = rng.uniform(0.2, 0.8, 2) * (width, height)
    bump = 40 * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * (0.35 * width) ** 2))
    luma = 100 + gx * (xs - width / 2) + gy * (ys - height / 2) + bump
    return _frame(luma * (1 << (bit_depth - 8)), bit_depth)


def noisy_grating(width: int, height: int, angle: float = 30.0, period: float = 9.0,
                  sigma: float = 10.0, seed: int = 0, bit_depth: int = 8) -> Frame:
    """Directional grating with additive white Gaussian noise."""
    rng = np.random.default_rng(seed)
    base = directional_grating(width, height, angle, period, bit_depth=bit_depth)
    noise = rng.normal(0.0, sigma * (1 << (bit_depth - 8)), (height, width))
    return _frame(base.planes[0] + noise, bit_depth)


def natural_frame(name: str, size: int = 64) -> Frame:
    """One of the committed natural crops, 128x128 or its 64x64 centre."""
    if name not in NATURAL_TEXTURED + NATURAL_SMOOTH:
        raise ConfigError(f"unknown natural image {name!r}")
    if size not in (64, _STORED_SIZE):
        raise ConfigError(f"natural crops come in 64 or 128, got {size}")
    with resources.as_file(resources.files("mlintra") / "data" / f"{name}.yuv") as path:
        frame = load_yuv(path, _STORED_SIZE, _STORED_SIZE, 8)
    if size == _STORED_SIZE:
        return frame
    off = (_STORED_SIZE - size) // 2
    planes = (frame.planes[0][off:off + size, off:off + size],
              frame.planes[1][off // 2:(off + size) // 2, off // 2:(off + size) // 2],
              frame.planes[2][off // 2:(off + size) // 2, off // 2:(off + size) // 2])
    return crop_frame(Frame.from_planes(*planes, bit_depth=8), size, size)


def codec_corpus(size: int = 64, seed: int = 0) -> list[tuple[str, Frame]]:
    """Frames for the closed-loop codec checks: three synthetic, three natural."""
    return [
        ("grating", directional_grating(size, size, angle=30.0, period=11.0)),
        ("ramp", smooth_ramp(size, size, seed=seed)),
        ("noisy_grating", noisy_grating(size, size, angle=60.0, period=8.0, sigma=8.0, seed=seed)),
        *((name, natural_frame(name, size)) for name in NATURAL_TEXTURED[:3]),
    ]


def census_corpus(size: int = 128, seed: int = 0) -> list[tuple[str, Frame]]:
    """Noisy gratings at several orientations plus the textured natural crops."""
    gratings = [(f"noisy_grating_{a}", noisy_grating(size, size, angle=a, period=p, sigma=10.0,
                                                     seed=seed + i))
                for i, (a, p) in enumerate(((20.0, 9.0), (65.0, 12.0), (110.0, 7.0), (150.0, 10.0)))]
    return gratings + [(name, natural_frame(name, size)) for name in NATURAL_TEXTURED]


def smooth_corpus(size: int = 128, seed: int = 0) -> list[tuple[str, Frame]]:
    """Smooth-dominated content: seeded ramps and the smooth natural crops."""
    ramps = [(f"ramp_{i}", smooth_ramp(size, size, seed=seed + i)) for i in range(3)]
    return ramps + [(name, natural_frame(name, size)) for name in NATURAL_SMOOTH]
