"""Pulse shapes, rate conversion and the two fractional-delay paths."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from csslink.filters import (
    FarrowInterpolator,
    FirFilter,
    apply_fir,
    design_rc,
    design_srrc,
    farrow_shift,
    fractional_delay,
    half_sample_branches,
    matched_front_end,
    raised_cosine,
    resample,
    root_raised_cosine,
)


def test_srrc_unit_energy():
    fir = design_srrc(0.25, 16, 2)
    assert np.sum(fir.taps**2) == pytest.approx(1.0, rel=1e-12)
    assert len(fir.taps) == 16 * 2 + 1
    assert fir.delay == 16


def test_srrc_cascade_is_raised_cosine():
    """Two unit-energy square roots convolve to the unit-peak pulse."""
    srrc = design_srrc(0.25, 16, 2)
    cascade = np.convolve(srrc.taps, srrc.taps)
    rc = design_rc(0.25, 32, 2)
    assert len(cascade) == len(rc.taps)
    # Truncation of the square root's tails costs a few parts in 1e3.
    assert_allclose(cascade, rc.taps, atol=5e-3)
    # The center tap is the unit energy itself, so it is exact.
    assert cascade[len(cascade) // 2] == pytest.approx(1.0, abs=1e-15)


def test_raised_cosine_nyquist_zeros():
    """The composite pulse vanishes at every nonzero chip instant."""
    k = np.arange(-20, 21)
    h = raised_cosine(k.astype(float), 0.25)
    assert h[20] == 1.0
    assert np.max(np.abs(h[k != 0])) < 1e-15


def test_raised_cosine_singular_points():
    b = 0.2
    t = 1.0 / (2 * b)  # 2.5
    val = raised_cosine(np.array([t, -t]), b)
    expected = (np.pi / 4) * np.sinc(t)
    assert_allclose(val, expected, rtol=1e-12)


def test_root_raised_cosine_center_value():
    b = 0.25
    assert root_raised_cosine(np.array([0.0]), b)[0] == pytest.approx(1 - b + 4 * b / np.pi)


def test_apply_fir_alignment():
    fir = design_srrc(0.25, 8, 2)
    x = np.zeros(64, dtype=complex)
    x[20] = 1.0
    y = apply_fir(x, fir)
    assert len(y) == len(x) + fir.delay
    assert np.argmax(np.abs(y)) == 20


class TestFarrow:
    def test_coefficients_match_lagrange_product_form(self):
        interp = FarrowInterpolator(order=5)
        nodes = np.arange(6) - 2
        for frac in (0.0, 0.125, 0.5, 0.7, 0.99):
            direct = np.array(
                [
                    np.prod([(frac - nj) / (ni - nj) for nj in nodes if nj != ni])
                    for ni in nodes
                ]
            )
            assert_allclose(interp.coefficients(frac), direct, atol=1e-13)

    def test_weights_sum_to_one(self):
        interp = FarrowInterpolator(order=5)
        for frac in np.linspace(0, 1, 9):
            assert np.sum(interp.coefficients(frac)) == pytest.approx(1.0, abs=1e-12)

    def test_reproduces_polynomials_exactly(self):
        """Degree-5 Lagrange interpolation is exact on degree-5 data."""
        interp = FarrowInterpolator(order=5)
        n = np.arange(40, dtype=float)
        x = 0.01 * n**5 - 0.3 * n**3 + 2 * n - 7
        y = farrow_shift(interp, x, 0.3)
        t = n - 0.3
        expected = 0.01 * t**5 - 0.3 * t**3 + 2 * t - 7
        assert_allclose(y[4:-4], expected[4:-4], rtol=1e-9)

    def test_tone_shift_accuracy(self):
        interp = FarrowInterpolator(order=5)
        n = np.arange(256)
        f = 0.1
        x = np.exp(2j * np.pi * f * n)
        y = farrow_shift(interp, x, 0.37)
        expected = np.exp(2j * np.pi * f * (n - 0.37))
        # Order-5 Lagrange at this frequency: error (2 pi f)^6 / 6! times
        # the node polynomial, a few 1e-4.
        assert_allclose(y[8:-8], expected[8:-8], atol=5e-4)

    def test_integer_shift_is_exact(self):
        interp = FarrowInterpolator(order=5)
        x = np.sin(np.arange(50, dtype=float))
        y = farrow_shift(interp, x, 3.0)
        assert_allclose(y[5:], x[2:-3], atol=1e-12)


class TestFractionalDelay:
    def test_zero_delay_is_transparent(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        y = fractional_delay(x, 0.0)
        assert_allclose(y[: len(x)], x, atol=1e-14)

    def test_dc_gain(self):
        y = fractional_delay(np.ones(128), 0.4)
        assert_allclose(y[40:80], 1.0, atol=1e-3)

    def test_tone_delay_matches_analytic_phase(self):
        # The 65-tap Kaiser kernel sits ~60 dB under the signal; that is
        # the accuracy ceiling of the delay, flat across the passband.
        n = np.arange(512)
        f = 0.2
        x = np.exp(2j * np.pi * f * n)
        for d in (0.5, -0.3, 2.7):
            y = fractional_delay(x, d)
            expected = np.exp(2j * np.pi * f * (n - d))
            assert_allclose(y[64:448], expected[64:448], atol=2e-3)


def test_resample_round_trip_preserves_passband_tone():
    n = np.arange(1024)
    x = np.exp(2j * np.pi * 0.15 * n)
    up = resample(x, 4, 1)
    assert len(up) == 4 * len(x)
    back = resample(up, 1, 4)
    assert_allclose(back[100:900], x[100:900], atol=2e-3)


def test_resample_rejects_mixed_ratios():
    with pytest.raises(ValueError):
        resample(np.ones(8), 3, 2)
    with pytest.raises(ValueError):
        resample(np.ones(8), 0, 1)


def test_resample_identity_copies():
    x = np.arange(5, dtype=float)
    y = resample(x, 1, 1)
    assert np.array_equal(x, y) and y is not x


def test_matched_front_end_validates_rate():
    srrc = design_srrc(0.25, 8, 2)
    with pytest.raises(ValueError):
        matched_front_end(np.ones(32, dtype=complex), 1, srrc)
    with pytest.raises(ValueError):
        matched_front_end(np.ones(32, dtype=complex), 3, srrc)


def test_half_sample_branches_indexing():
    x2 = np.arange(10, dtype=float)
    a, b = half_sample_branches(x2)
    assert np.array_equal(a, [0, 2, 4, 6, 8])
    assert np.array_equal(b, [0, 1, 3, 5, 7])


def test_fir_filter_metadata():
    fir = FirFilter(taps=np.ones(9), rate=2, kind="rc")
    assert fir.delay == 4
