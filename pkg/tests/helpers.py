"""Small frame builders shared by the test modules."""

import numpy as np

from mlintra.frame import Frame


def random_frame(rng, width=64, height=64, bit_depth=8, smooth=False):
    top = 1 << bit_depth
    if smooth:
        ys, xs = np.mgrid[0:height, 0:width]
        base = (top // 2) + (top // 6) * np.sin(xs / 7.0 + ys / 11.0)
        luma = np.clip(base + rng.normal(0, top / 64, (height, width)), 0, top - 1)
    else:
        luma = rng.integers(0, top, (height, width))
    cb = rng.integers(0, top, (height // 2, width // 2))
    cr = rng.integers(0, top, (height // 2, width // 2))
    return Frame.from_planes(luma.astype(np.uint16), cb.astype(np.uint16), cr.astype(np.uint16),
                             bit_depth)


def planes_equal(a: Frame, b: Frame) -> bool:
    return all(np.array_equal(p, q) for p, q in zip(a.planes, b.planes))
