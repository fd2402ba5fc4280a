"""Chirp waveforms and symbol detection.

The basic up chirp over one symbol of M chips is

    x0[n] = exp(j 2 pi (n^2 / (2 M) - n / 2)),   n = 0 .. M-1,

sweeping -B/2 .. B/2 across the symbol.  Symbol m is the cyclic shift
x0[(n + m) mod M]; an optional PSK index p adds exp(j 2 pi p / Q).
De-chirping by the conjugate basic chirp turns symbol m into a complex
tone at bin m whose DFT phase carries a symbol-dependent constant

    theta_m = 2 pi (m^2 / (2 M) - m / 2)

on top of the channel phase, so coherent detection has to strip theta_m
per candidate bin.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .modem import CssSymbol, ModemConfig, round_half_away

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=16)
def basic_chirp(cfg: ModemConfig) -> np.ndarray:
    """Unit up chirp x0 of length M.  Cached per config; do not mutate."""
    m_count = cfg.m_count
    n = np.arange(m_count)
    x = np.exp(1j * TWO_PI * (n * n / (2.0 * m_count) - n / 2.0))
    x.setflags(write=False)
    return x


def symbol_chirp(cfg: ModemConfig, sym: CssSymbol) -> np.ndarray:
    """Waveform of one symbol, cyclic shift by m plus the PSK phase."""
    if not 0 <= sym.m < cfg.m_count:
        raise ValueError(f"symbol value {sym.m} outside [0, {cfg.m_count})")
    if not 0 <= sym.p < cfg.psk_order:
        raise ValueError(f"psk index {sym.p} outside [0, {cfg.psk_order})")
    x = np.roll(basic_chirp(cfg), -sym.m)
    if cfg.psk_order > 1 and sym.p:
        x = x * np.exp(1j * TWO_PI * sym.p / cfg.psk_order)
    return x


@lru_cache(maxsize=16)
def down_chirp(cfg: ModemConfig) -> np.ndarray:
    """Conjugate basic chirp, used as the preamble down symbol."""
    x = np.conj(basic_chirp(cfg))
    x.setflags(write=False)
    return x


def chirp_phase(cfg: ModemConfig, k: int | np.ndarray) -> np.ndarray:
    """Symbol-dependent phase theta_k left on bin k after de-chirping."""
    return TWO_PI * (np.asarray(k) ** 2 / (2.0 * cfg.m_count) - np.asarray(k) / 2.0)


@lru_cache(maxsize=16)
def theta_rotator(cfg: ModemConfig) -> np.ndarray:
    """exp(-j theta_k) over all bins, the de-rotation coherent detection
    applies before taking the real part.  Cached per config; do not mutate.
    """
    rot = np.exp(-1j * chirp_phase(cfg, np.arange(cfg.m_count)))
    rot.setflags(write=False)
    return rot


def dechirp(cfg: ModemConfig, block: np.ndarray, direction: str = "up") -> np.ndarray:
    """Multiply one M-chip block by the matching conjugate chirp.

    direction "up" processes data/up-preamble symbols (multiply by
    conj(x0)); "down" processes the down-chirp preamble (multiply by x0).
    """
    if block.shape[-1] != cfg.m_count:
        raise ValueError(f"block length {block.shape[-1]} != M = {cfg.m_count}")
    if direction == "up":
        return block * down_chirp(cfg)
    if direction == "down":
        return block * basic_chirp(cfg)
    raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")


def dft_bins(u: np.ndarray) -> np.ndarray:
    """Unitary DFT of a de-chirped block: bins[k] = sum(u e^-j2pi nk/M)/sqrt(M).

    A noiseless symbol m at perfect sync concentrates in bins[m] with
    magnitude sqrt(M); unit-variance noise stays unit variance per bin.
    """
    m_count = u.shape[-1]
    return np.fft.fft(u, axis=-1) / np.sqrt(m_count)


def detect_noncoherent(bins: np.ndarray) -> int:
    """Magnitude argmax over bins; ties resolve to the smallest index."""
    return int(np.argmax(np.abs(bins)))


def detect_coherent(cfg: ModemConfig, bins: np.ndarray, psi_hat: float) -> CssSymbol:
    """ML detection with a phase reference: argmax_k Re{bins[k] e^-j psi_k}.

    psi_k = psi_hat + theta_k combines the tracked channel phase estimate
    (radians) with the chirp-dependent term of bin k.  With psk_order > 1
    each bin is first rotated by its nearest constellation point (halves
    rounding away from zero), making the metric the joint ML statistic
    over (m, p); p_hat is that nearest point of the winning bin.

    Returns
    -------
    CssSymbol
        Detected cyclic shift and PSK index (p = 0 when psk_order == 1).
    """
    m_count = cfg.m_count
    if bins.shape[-1] != m_count:
        raise ValueError(f"expected {m_count} bins, got {bins.shape[-1]}")
    rotated = bins * theta_rotator(cfg) * np.exp(-1j * psi_hat)
    if cfg.psk_order == 1:
        return CssSymbol(m=int(np.argmax(rotated.real)), p=0)
    q = cfg.psk_order
    scaled = q * np.angle(rotated) / TWO_PI
    p_near = np.trunc(scaled + np.copysign(0.5, scaled))
    w = TWO_PI * p_near / q
    metric = rotated.real * np.cos(w) + rotated.imag * np.sin(w)
    m_hat = int(np.argmax(metric))
    return CssSymbol(m=m_hat, p=int(p_near[m_hat]) % q)


def psnr_db(cfg: ModemConfig, n0: float) -> float:
    """Peak SNR of the de-chirped DFT: 10 log10(M / N0).

    n0 is the complex noise variance per baseband sample (1/snr linear).
    """
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    return 10.0 * np.log10(cfg.m_count / n0)
