"""Chirp construction, de-chirping and symbol detection."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from csslink import CssSymbol, ModemConfig
from csslink.chirp import (
    TWO_PI,
    basic_chirp,
    chirp_phase,
    dechirp,
    detect_coherent,
    detect_noncoherent,
    dft_bins,
    down_chirp,
    psnr_db,
    symbol_chirp,
    theta_rotator,
)

CFG = ModemConfig(sf=7)
M = CFG.m_count


def test_unit_modulus():
    assert_allclose(np.abs(basic_chirp(CFG)), 1.0, atol=1e-12)
    assert_allclose(np.abs(down_chirp(CFG)), 1.0, atol=1e-12)


def test_down_chirp_is_conjugate():
    assert_allclose(down_chirp(CFG), np.conj(basic_chirp(CFG)), atol=1e-15)


def test_cached_waveforms_are_immutable():
    with pytest.raises(ValueError):
        basic_chirp(CFG)[0] = 0.0


def test_cyclic_shift_property():
    sym = symbol_chirp(CFG, CssSymbol(m=5))
    assert_allclose(sym, np.roll(basic_chirp(CFG), -5), atol=1e-15)


def test_all_shifts_are_orthogonal():
    """Gram matrix of the M cyclic shifts is M times the identity."""
    x0 = basic_chirp(CFG)
    shifts = np.array([np.roll(x0, -m) for m in range(M)])
    gram = shifts @ shifts.conj().T
    assert_allclose(gram, M * np.eye(M), atol=1e-9)


@pytest.mark.parametrize("m", [0, 1, 17, M // 2, M - 1])
def test_dechirp_concentrates_energy(m):
    """A clean symbol de-chirps to a single DFT bin of magnitude sqrt(M)."""
    bins = dft_bins(dechirp(CFG, symbol_chirp(CFG, CssSymbol(m))))
    mags = np.abs(bins)
    assert mags[m] == pytest.approx(np.sqrt(M), abs=1e-9)
    mags[m] = 0.0
    assert mags.max() < 1e-9


def test_dft_bins_preserve_energy():
    rng = np.random.default_rng(3)
    u = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    bins = dft_bins(u)
    assert np.sum(np.abs(bins) ** 2) == pytest.approx(np.sum(np.abs(u) ** 2), rel=1e-12)


@pytest.mark.parametrize("m", [0, 3, M - 1])
def test_peak_bin_phase_matches_chirp_term(m):
    """The surviving phase on bin m is the known quadratic chirp term."""
    bins = dft_bins(dechirp(CFG, symbol_chirp(CFG, CssSymbol(m))))
    expected = np.sqrt(M) * np.exp(1j * chirp_phase(CFG, m))
    assert_allclose(bins[m], expected, atol=1e-9)


def test_theta_rotator_cancels_chirp_term():
    rot = theta_rotator(CFG)
    k = np.arange(M)
    assert_allclose(rot, np.exp(-1j * chirp_phase(CFG, k)), atol=1e-14)
    for m in (0, 9, M - 2):
        bins = dft_bins(dechirp(CFG, symbol_chirp(CFG, CssSymbol(m))))
        assert (bins * rot)[m].real == pytest.approx(np.sqrt(M), abs=1e-9)


def test_noncoherent_detection_roundtrip():
    for m in range(0, M, 11):
        bins = dft_bins(dechirp(CFG, symbol_chirp(CFG, CssSymbol(m))))
        assert detect_noncoherent(bins) == m


@pytest.mark.parametrize("q", [2, 4, 8])
def test_psk_roundtrip_all_phases(q):
    """Joint shift/phase detection recovers every (m, p) pair exactly."""
    cfg = ModemConfig(sf=7, psk_order=q)
    for m in range(0, M, 13):
        for p in range(q):
            bins = dft_bins(dechirp(cfg, symbol_chirp(cfg, CssSymbol(m, p))))
            hat = detect_coherent(cfg, bins, 0.0)
            assert (hat.m, hat.p) == (m, p)


def test_psk_roundtrip_with_carrier_phase():
    cfg = ModemConfig(sf=7, psk_order=4)
    psi = 1.234
    for m, p in [(0, 0), (40, 1), (99, 2), (M - 1, 3)]:
        wave = symbol_chirp(cfg, CssSymbol(m, p)) * np.exp(1j * psi)
        hat = detect_coherent(cfg, dft_bins(dechirp(cfg, wave)), psi)
        assert (hat.m, hat.p) == (m, p)


def test_coherent_detection_uses_phase():
    """With the phase reference, an anti-phase ghost bin cannot win."""
    cfg = ModemConfig(sf=7)
    m = 30
    bins = dft_bins(dechirp(cfg, symbol_chirp(cfg, CssSymbol(m))))
    # Plant a stronger peak at another bin, rotated to the wrong phase.
    ghost = 60
    bins[ghost] = 1.5 * np.sqrt(M) * np.exp(1j * (chirp_phase(cfg, ghost) + np.pi))
    assert detect_noncoherent(bins) == ghost
    assert detect_coherent(cfg, bins, 0.0).m == m


def test_joint_detection_matches_exhaustive_search():
    """The per-bin nearest-phase shortcut equals the full (m, p) argmax."""
    cfg = ModemConfig(sf=6, psk_order=4)
    mm = cfg.m_count
    rng = np.random.default_rng(17)
    theta = chirp_phase(cfg, np.arange(mm))
    for _ in range(50):
        bins = rng.standard_normal(mm) + 1j * rng.standard_normal(mm)
        psi = rng.uniform(0, TWO_PI)
        best, best_metric = None, -np.inf
        for m in range(mm):
            for p in range(4):
                ref = np.exp(1j * (psi + theta[m] + TWO_PI * p / 4))
                metric = (bins[m] * np.conj(ref)).real
                if metric > best_metric:
                    best, best_metric = (m, p), metric
        hat = detect_coherent(cfg, bins, psi)
        assert (hat.m, hat.p) == best


def test_psnr_value():
    # M / N0 in dB: 128 / 10 -> 11.07 dB.
    assert psnr_db(CFG, 10.0) == pytest.approx(10 * np.log10(12.8))
