import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlintra.errors import ConfigError
from mlintra.reference import (force_smooth, gather_reference_line, needs_smoothing,
                               sample_count, smooth_reference)


def _direct(plane, x0, y0, n, m):
    """Samples of line L_m read straight off the plane (full availability)."""
    top = [plane[y0 - m - 1, x0 + dx] for dx in range(-m - 1, 2 * n + m)]
    left = [plane[y0 + dy, x0 - m - 1] for dy in range(-m, 2 * n + m)]
    return np.array(top), np.array(left)


@pytest.mark.parametrize("n", [4, 8, 16, 32])
@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_gather_matches_direct_read(rng, n, m):
    plane = rng.integers(0, 256, (160, 160))
    x0 = y0 = 40
    ref = gather_reference_line(plane, x0, y0, n, m)
    top, left = _direct(plane, x0, y0, n, m)
    assert len(ref) == sample_count(n, m) == 4 * (n + m) + 1
    assert np.array_equal(ref.top, top)
    assert np.array_equal(ref.left, left)
    assert ref.top_available.all() and ref.left_available.all()


def test_nothing_available_gives_mid_grey():
    plane = np.full((32, 32), 17)
    ref = gather_reference_line(plane, 0, 0, 8, 2, bit_depth=10)
    assert np.all(ref.top == 512) and np.all(ref.left == 512)


def test_padding_copies_predecessor_in_scan_order():
    plane = np.arange(64 * 64).reshape(64, 64)
    avail = np.zeros((64, 64), dtype=bool)
    avail[:16, :] = True                    # rows above the block only
    ref = gather_reference_line(plane, 16, 16, 8, 0, avail)
    # left column is unavailable below the corner, scan runs bottom-left upwards,
    # so leading unavailable samples take the first available value: the corner
    assert np.all(ref.left == plane[15, 15])
    assert np.array_equal(ref.top, plane[15, 15:32])


def test_padding_top_right_extends_last_available():
    plane = np.arange(64 * 64).reshape(64, 64)
    avail = np.ones((64, 64), dtype=bool)
    avail[:, 24:] = False
    ref = gather_reference_line(plane, 16, 16, 8, 0, avail)
    assert np.all(ref.top[9:] == plane[15, 23])
    assert np.array_equal(ref.left, plane[16:32, 15])


def test_negative_line_rejected():
    with pytest.raises(ConfigError):
        gather_reference_line(np.zeros((16, 16)), 4, 4, 4, -1)


@pytest.mark.parametrize("size,mode,expected", [
    (4, 0, False), (4, 18, False),       # 4x4 never filtered
    (8, 1, False),                       # DC never
    (8, 0, True),                        # planar at 8
    (8, 2, True), (8, 18, True), (8, 34, True),
    (8, 3, False), (8, 17, False),       # distance 7 is not above the 8x8 threshold
    (16, 10, False), (16, 26, False), (16, 9, False), (16, 27, False),
    (16, 8, True), (16, 24, True),
    (32, 10, False), (32, 11, True), (32, 25, True),
])
def test_smoothing_rule(size, mode, expected):
    assert needs_smoothing(size, mode) is expected


def test_chroma_never_smoothed():
    assert not any(needs_smoothing(s, m, is_luma=False) for s in (8, 16, 32) for m in range(35))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1023), min_size=4 * 8 + 1, max_size=4 * 8 + 1))
def test_smoothing_filter_values(samples):
    plane = np.zeros((32, 32), dtype=np.int64)
    seq = np.array(samples)
    ref = gather_reference_line(plane, 8, 8, 8, 0, bit_depth=10)
    from dataclasses import replace
    ref = replace(ref, top=seq[16:], left=seq[:16][::-1].copy())
    out = force_smooth(ref).sequence()
    s = ref.sequence()
    assert out[0] == s[0] and out[-1] == s[-1]
    expected = (s[:-2] + 2 * s[1:-1] + s[2:] + 2) >> 2
    assert np.array_equal(out[1:-1], expected)
    assert smooth_reference(ref, 1) is ref


def test_constant_line_unchanged_by_smoothing():
    plane = np.full((64, 64), 77)
    ref = gather_reference_line(plane, 16, 16, 16, 3)
    sm = force_smooth(ref)
    assert np.all(sm.top == 77) and np.all(sm.left == 77)
