import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import float_forward
from mlintra.errors import ConfigError
from mlintra.transform import (INTRA_ROUNDING, CoeffBlock, chroma_qp, dct_matrix, dequantize,
                               forward_transform, inverse_transform, quant_step, quantize,
                               reconstruct_residual)

SIZES = [4, 8, 16, 32]


def _cases():
    return [(n, dst) for n in SIZES for dst in ((False, True) if n == 4 else (False,))]


@pytest.mark.parametrize("n,dst", _cases())
def test_zero_residual(n, dst):
    assert not forward_transform(np.zeros((n, n), int), dst).any()


@pytest.mark.parametrize("n", SIZES)
def test_constant_residual_only_dc(n):
    c = forward_transform(np.full((n, n), 37))
    assert c[0, 0] != 0
    c[0, 0] = 0
    assert not c.any()


HEVC_DCT32_FIRST_COLUMN = [64, 90, 90, 90, 89, 88, 87, 85, 83, 82, 80, 78, 75, 73, 70, 67,
                           64, 61, 57, 54, 50, 46, 43, 38, 36, 31, 25, 22, 18, 13, 9, 4]


def test_dct_table_is_the_standard_one():
    assert np.abs(dct_matrix(32)[:, 0]).tolist() == HEVC_DCT32_FIRST_COLUMN
    assert dct_matrix(4).tolist() == [[64, 64, 64, 64], [83, 36, -36, -83],
                                      [64, -64, -64, 64], [36, -83, 83, -36]]


@pytest.mark.parametrize("n,dst", [c for c in _cases() if c[0] <= 8])
def test_round_trip_within_one(rng, n, dst):
    for _ in range(20):
        x = rng.integers(-255, 256, (n, n))
        back = inverse_transform(forward_transform(x, dst), dst)
        assert np.abs(back - x).max() <= 1


@pytest.mark.parametrize("n,dst", _cases())
def test_round_trip_tracks_float_pipeline(rng, n, dst):
    # the integer bases are only near-orthogonal; at 16 and 32 even exact float
    # arithmetic with them drifts by ~3 on full-range noise, so compare to that
    mat = (np.array([[29, 55, 74, 84], [74, 74, 0, -74], [84, -29, -74, 55], [55, -84, 74, -29]])
           if dst else dct_matrix(n)).astype(float)
    gram = mat.T @ mat / (mat[0] @ mat[0])
    for _ in range(20):
        x = rng.integers(-255, 256, (n, n))
        back = inverse_transform(forward_transform(x, dst), dst)
        assert np.abs(back - gram @ x @ gram).max() <= 1
        small = rng.integers(-32, 33, (n, n))
        assert np.abs(inverse_transform(forward_transform(small, dst), dst) - small).max() <= 1


@pytest.mark.parametrize("n,dst", _cases())
def test_forward_matches_float_oracle(rng, n, dst):
    # integer basis entries are within 1.5 of the scaled cosines (sines), so the
    # relative basis error is at most e = 1.5 * n / (64 * sqrt n) in Frobenius norm
    scale = 128 if dst else 64 * math.sqrt(n)
    e = 1.5 * n / scale
    gain = 2.0 ** (15 - 8 - int(math.log2(n)))
    for _ in range(20):
        x = rng.integers(-255, 256, (n, n))
        err = np.abs(forward_transform(x, dst) - float_forward(x, dst)).max()
        assert err <= gain * np.linalg.norm(x) * (2 * e + e * e) + 2


@settings(max_examples=40, deadline=None)
@given(n=st.sampled_from(SIZES), seed=st.integers(0, 10 ** 6))
def test_linearity_before_rounding(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(-255, 256, (n, n))
    b = rng.integers(-255, 256, (n, n))
    # the integer pipeline rounds twice; linearity holds up to that rounding
    diff = forward_transform(a + b) - forward_transform(a) - forward_transform(b)
    assert np.abs(diff).max() <= 2


@pytest.mark.parametrize("qp", [0, 22, 37, 51])
def test_zero_coefficients_quantize_to_zero(qp):
    assert not quantize(np.zeros((8, 8), int), qp).levels.any()


@pytest.mark.parametrize("n", SIZES)
@pytest.mark.parametrize("qp", [4, 17, 22, 27, 32, 37, 45])
def test_quantizer_error_bound(rng, n, qp):
    # dead-zone rounding leaves up to (1 - 171/512) of a step, plus integer rounding
    step = quant_step(qp, n)
    coeffs = rng.integers(-20000, 20001, (n, n))
    back = dequantize(quantize(coeffs, qp))
    bound = (1 - INTRA_ROUNDING / 512) * step + 1
    assert np.abs(back - coeffs).max() <= bound


def test_step_doubles_every_six():
    for qp in range(0, 46):
        assert quant_step(qp + 6, 8) == pytest.approx(2 * quant_step(qp, 8))


@settings(max_examples=40, deadline=None)
@given(qp=st.integers(0, 45), n=st.sampled_from(SIZES), seed=st.integers(0, 10 ** 6))
def test_coarser_qp_never_grows_levels(qp, n, seed):
    coeffs = np.random.default_rng(seed).integers(-30000, 30001, (n, n))
    fine = np.abs(quantize(coeffs, qp).levels)
    coarse = np.abs(quantize(coeffs, qp + 6).levels)
    assert np.all(coarse <= fine)


def _psnr(a, b):
    mse = np.mean((a - b) ** 2)
    return math.inf if mse == 0 else 10 * math.log10(255 ** 2 / mse)


@pytest.mark.parametrize("n", SIZES)
def test_round_trip_psnr_improves_with_lower_qp(rng, n):
    x = rng.integers(-100, 101, (n, n))
    out = {}
    for qp in (22, 37):
        rec = reconstruct_residual(quantize(forward_transform(x), qp))
        out[qp] = _psnr(x, rec)
    assert out[22] > out[37]


def test_error_energy_grows_with_qp(rng):
    blocks = [rng.integers(-60, 61, (8, 8)) for _ in range(30)]
    energy = [sum(int(((b - reconstruct_residual(quantize(forward_transform(b), qp))) ** 2).sum())
                  for b in blocks) for qp in (12, 22, 32, 42)]
    assert energy == sorted(energy) and energy[0] < energy[-1]


def test_all_zero_levels_reconstruct_to_zero():
    assert not reconstruct_residual(CoeffBlock(np.zeros((16, 16), int), 30)).any()


def test_dst_only_at_four():
    with pytest.raises(ConfigError):
        CoeffBlock(np.zeros((8, 8), int), 30, is_dst=True)
    with pytest.raises(ConfigError):
        quantize(np.zeros((4, 4), int), 52)


def test_chroma_qp_table():
    assert [chroma_qp(q) for q in (22, 29, 30, 34, 37, 43, 44, 51)] == [22, 29, 29, 33, 34, 37, 38, 45]
