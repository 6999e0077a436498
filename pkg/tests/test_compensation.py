import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlintra.batched import compensate_modes, predict_modes, ring_predictions
from mlintra.coding import BlockPredictor, CodingState, CodingTools
from mlintra.compensation import (CompensationType, ResidueLine, blend_with_nearest, compensate,
                                  compensation_type_for_mode, compute_interval_residue,
                                  directional_weight, distance_weight, extended_prediction,
                                  interval_prediction, read_interval)
from mlintra.errors import ConfigError
from mlintra.prediction import predict
from mlintra.reference import gather_reference_line, smooth_reference

T = CompensationType


def _residue(top, left, base=100):
    """Residue line with a flat prediction ``base`` and the given residues (ring order)."""
    top, left = np.asarray(top), np.asarray(left)
    return ResidueLine(base + top, np.full(top.size, base), base + left, np.full(left.size, base))


def test_type_per_mode():
    expected = {0: T.BOTH_SIDE, 1: T.BOTH_SIDE, 2: T.BI_DIRECTIONAL, 34: T.BI_DIRECTIONAL}
    expected.update({m: T.VERTICAL for m in range(7, 14)})
    expected.update({m: T.PARALLEL for m in range(14, 23)})
    expected.update({m: T.HORIZONTAL for m in range(23, 30)})
    expected.update({m: T.NONE for m in (3, 4, 5, 6, 30, 31, 32, 33)})
    assert {m: compensation_type_for_mode(m) for m in range(35)} == expected
    assert compensation_type_for_mode(30, horizontal_to_30=True) is T.HORIZONTAL
    with pytest.raises(ConfigError):
        compensation_type_for_mode(35)


def test_directional_weights():
    assert {m: directional_weight(m) for m in (7, 10, 13)} == {7: 33, 10: 42, 13: 33}
    assert {m: directional_weight(m) for m in (23, 26, 29)} == {23: 33, 26: 42, 29: 33}
    assert [distance_weight(k) for k in range(3)] == [(3, 4), (2, 4), (1, 4)]


def test_vertical_type_hand_values():
    n = 4
    pred = np.full((n, n), 100)
    res = _residue([0, 8, -8, 16, 0, 0, 0, 0], np.zeros(8, int))
    out = compensate(pred, res, 10)
    assert out[0].tolist() == [105, 95, 111, 100]
    assert np.all(out[1:] == 100)


def test_horizontal_type_hand_values():
    n = 4
    pred = np.full((n, n), 100)
    res = _residue(np.zeros(8, int), [0, 8, -8, 16, 0, 0, 0, 0])
    out = compensate(pred, res, 26)
    assert out[:, 0].tolist() == [105, 95, 111, 100]
    assert np.all(out[:, 1:] == 100)


def test_both_side_hand_values():
    n = 8
    pred = np.full((n, n), 100)
    res = _residue(np.r_[0, np.full(n, 8), 0, 0, 0], np.zeros(n + 4, int))
    out = compensate(pred, res, 1)
    assert out[:3, 0].tolist() == [106, 104, 102]
    assert np.all(out[3:] == 100)
    res = _residue(np.r_[0, np.full(n, 8), 0, 0, 0], np.r_[0, np.full(n, 8), 0, 0, 0])
    out = compensate(pred, res, 0)
    assert out[0, 0] == 112 and out[1, 1] == 108 and out[2, 0] == 108 and out[4, 4] == 100


def test_bi_directional_reads_shifted_residue():
    n = 8
    top = np.arange(n + 4) * 4
    pred = np.full((n, n), 100)
    out = compensate(pred, _residue(top, np.zeros(n + 4, int)), 34)
    for k in range(3):
        for x in range(n):
            # row k uses the L0 sample at x + k + 1 (ring entry x + k + 2)
            assert out[k, x] == 100 + ((3 - k) * top[x + k + 2] + 2) // 4


def test_parallel_mode_18_follows_the_diagonal():
    n = 8
    rng = np.random.default_rng(3)
    top = rng.integers(-20, 21, n + 4)
    left = rng.integers(-20, 21, n + 4)
    pred = np.full((n, n), 128)
    out = compensate(pred, _residue(top, left, 128), 18)
    for y in range(n):
        for x in range(n):
            k = min(x, y)
            if k >= 3:
                assert out[y, x] == 128
                continue
            # the 45-degree ray through (x, y) meets L0 at (x-y-1, -1) or (-1, y-x-1)
            r = top[x - y] if x >= y else left[y - x]
            assert out[y, x] == 128 + ((3 - k) * r + 2) // 4


def test_result_is_clamped():
    pred = np.full((4, 4), 250)
    out = compensate(pred, _residue(np.full(8, 60), np.zeros(8, int), 100), 10)
    assert out.max() == 255


@settings(max_examples=50, deadline=None)
@given(mode=st.integers(0, 34), n=st.sampled_from([4, 8, 16]), seed=st.integers(0, 10 ** 6))
def test_zero_residue_is_a_no_op(mode, n, seed):
    pred = np.random.default_rng(seed).integers(0, 256, (n, n))
    res = _residue(np.zeros(n + 4, int), np.zeros(n + 4, int))
    assert np.array_equal(compensate(pred, res, mode), pred)


def test_blending_rounding():
    assert blend_with_nearest(np.array([100, 1, 0, 255]), np.array([0, 0, 1, 255])).tolist() == \
        [75, 1, 0, 255]
    with pytest.raises(ConfigError):
        blend_with_nearest(np.zeros((4, 4)), np.zeros((8, 8)))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_extended_prediction_anchors(rng, m):
    n = 8
    ref = gather_reference_line(rng.integers(0, 256, (64, 64)), 24, 24, n, m)
    iv = interval_prediction(ref, 20)
    ext = extended_prediction(ref, 20)
    assert ext.shape == (n + 1, n + 1)
    assert np.array_equal(ext[1:, 1:], predict(ref, 20))
    assert np.array_equal(ext[0], iv.top[:n + 1])
    assert np.array_equal(ext[:, 0], iv.left[:n + 1])
    with pytest.raises(ConfigError):
        extended_prediction(gather_reference_line(np.zeros((64, 64)), 8, 8, 8, 0), 20)


def test_unavailable_interval_gives_zero_residue(rng):
    recon = rng.integers(0, 256, (64, 64))
    ref = gather_reference_line(recon, 16, 16, 8, 2)
    iv = interval_prediction(ref, 0)
    avail = np.zeros((64, 64), dtype=bool)
    res = compute_interval_residue(recon, iv, 16, 16, 8, avail)
    assert not res.top.any() and not res.left.any()
    (top, ok), _ = read_interval(recon, 0, 0, 8)
    assert not ok[0] and not ok.any()   # row -1 is outside the plane


def _per_mode(state, plane, x, y, n, m, mode, hor30):
    recon, avail = state.recon[plane], state.avail[plane]
    luma = plane == 0
    ref = smooth_reference(gather_reference_line(recon, x, y, n, m, avail, 8), mode, luma)
    pred = predict(ref, mode, luma)
    if m > 0:
        iv = interval_prediction(ref, mode)
        pred = compensate(pred, compute_interval_residue(recon, iv, x, y, n, avail), mode, 8, hor30)
        near = smooth_reference(gather_reference_line(recon, x, y, n, 0, avail, 8), mode, luma)
        pred = blend_with_nearest(pred, predict(near, mode, luma))
    return pred


def test_batched_path_equals_per_mode_definition():
    rng = np.random.default_rng(11)
    mismatches = 0
    for _ in range(60):
        n = int(rng.choice([4, 8, 16, 32, 64]))
        m = int(rng.integers(0, 4))
        hor30 = bool(rng.integers(2))
        plane = int(rng.integers(0, 3)) if n <= 32 else 0
        st_ = CodingState(128, 128, 8, CodingTools(horizontal_to_30=hor30))
        st_.recon[0][:] = rng.integers(0, 256, (128, 128))
        st_.recon[1][:] = rng.integers(0, 256, (64, 64))
        st_.recon[2][:] = st_.recon[1]
        size = st_.recon[plane].shape[0]
        x = int(rng.integers(0, size // n)) * n
        y = int(rng.integers(0, size // n)) * n
        st_.avail[plane][:] = rng.random(st_.avail[plane].shape) < 0.7
        st_.avail[plane][y:y + n, x:x + n] = False
        batch = BlockPredictor(st_, plane, x, y, n, m).predict_all()
        for mode in range(35):
            mismatches += not np.array_equal(batch[mode],
                                             _per_mode(st_, plane, x, y, n, m, mode, hor30))
    assert mismatches == 0


def test_batched_compensation_matches_scalar(rng):
    n, m = 8, 2
    recon = rng.integers(0, 256, (64, 64))
    ref = gather_reference_line(recon, 24, 24, n, m)
    from mlintra.reference import force_smooth
    sm = force_smooth(ref)
    modes = list(range(35))
    preds = predict_modes(ref, sm, modes)
    ring = ring_predictions(ref, sm, modes)
    (t, tok), (lft, lok) = read_interval(recon, 24, 24, n)
    out = compensate_modes(preds, modes, ring, np.r_[t, lft], np.r_[tok, lok], 8)
    for mode in modes:
        r = smooth_reference(ref, mode)
        res = compute_interval_residue(recon, interval_prediction(r, mode), 24, 24, n)
        assert np.array_equal(out[mode], compensate(predict(r, mode), res, mode))
