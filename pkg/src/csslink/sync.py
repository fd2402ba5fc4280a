"""Preamble construction, timing detection and the tracking loops.

The preamble is [CP | N_D down chirps | CP | N_U up chirps], each CP
being the tail of the chirp that follows it.  After de-chirping, a down
symbol peaks at bin tau + eps and an up symbol at eps - tau (both in
UI), so half-sum and half-difference of the two measurements separate
timing from frequency.

Fine tracking interpolates the DFT peak with its two half-bin
neighbours, which the receiver gets for free from the half-chip-delayed
branch of the 2x stream: that branch's spectrum is the on-time spectrum
shifted by half a bin, in opposite directions for up and down chirps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .chirp import basic_chirp, dechirp, dft_bins, down_chirp
from .modem import ModemConfig, round_half_away

PARABOLA_EPS = 1e-12


@lru_cache(maxsize=8)
def _dft_rows(cfg: ModemConfig, direction: str) -> np.ndarray:
    """Rows of the unitary DFT with the de-chirp reference folded in.

    rows[j] @ block equals dft_bins(dechirp(block))[j], letting the data
    path read single half-branch bins without a full transform.
    """
    m_count = cfg.m_count
    n = np.arange(m_count)
    w = np.exp(-2j * np.pi * np.outer(n, n) / m_count) / np.sqrt(m_count)
    ref = down_chirp(cfg) if direction == "up" else basic_chirp(cfg)
    rows = w * ref
    rows.setflags(write=False)
    return rows


def build_preamble(cfg: ModemConfig) -> np.ndarray:
    """Baseband preamble samples, length cfg.preamble_len."""
    up = basic_chirp(cfg)
    down = down_chirp(cfg)
    ncp = cfg.n_cp
    parts = [down[-ncp:]]
    parts.extend(down for _ in range(cfg.n_down))
    parts.append(up[-ncp:])
    parts.extend(up for _ in range(cfg.n_up))
    return np.concatenate(parts)


def accumulate_preamble(cfg: ModemConfig, repeats: np.ndarray) -> np.ndarray:
    """Average n_rep identical preamble repeats into one M-chip block.

    repeats is (n_rep * M,) or (n_rep, M).  Coherent averaging assumes no
    CFO across the repeats; with CFO present use the power-sum path in
    coarse_estimate instead.
    """
    m_count = cfg.m_count
    r = np.asarray(repeats)
    if r.ndim == 1:
        if len(r) % m_count:
            raise ValueError("repeat buffer length is not a multiple of M")
        r = r.reshape(-1, m_count)
    return r.mean(axis=0)


@dataclass
class BinSpectrum:
    """De-chirped DFT of one symbol on both sampling branches.

    bins is the on-time spectrum, half_all the spectrum of the
    half-chip-delayed branch, and half_bins the (v[-0.5], v[+0.5])
    neighbours of the peak after direction-dependent alignment.
    """

    bins: np.ndarray
    peak_index: int
    half_bins: tuple[complex, complex]
    half_all: np.ndarray | None = None


@dataclass(frozen=True)
class TimingEstimate:
    """Peak position of one de-chirped symbol, in bins (= UI)."""

    tau_int: int
    tau_frac: float

    @property
    def tau(self) -> float:
        return self.tau_int + self.tau_frac


@dataclass(frozen=True)
class CoarseSync:
    """Joint coarse estimates from the two preamble halves."""

    tau_ui: float
    eps_ui: float
    tau_down: float
    tau_up: float

    @property
    def plausible(self) -> bool:
        return abs(self.tau_down) <= 1.0 + 0.25 and abs(self.tau_up) <= 1.0 + 0.25


def signed_bin(k: int, m_count: int) -> int:
    """Map a DFT bin index to the signed range [-M/2, M/2)."""
    return k - m_count if k >= m_count // 2 else k


def parabolic_frac(mag_minus: float, mag_peak: float, mag_plus: float) -> float:
    """Fractional peak offset from half-bin spaced magnitude samples.

    Fits a parabola through |v| at -0.5, 0 and +0.5 bins around the peak.
    Degenerate fits (flat or inverted curvature) return 0 so a bad
    measurement never steers a loop by more than nothing.
    """
    den = 4.0 * (mag_minus + mag_plus - 2.0 * mag_peak)
    if den >= -PARABOLA_EPS:
        return 0.0
    frac = (mag_minus - mag_plus) / den
    return float(np.clip(frac, -0.5, 0.5))


def _half_neighbours(
    half_all: np.ndarray, k: int, direction: str
) -> tuple[complex, complex]:
    """Half-bin samples (v[k-0.5], v[k+0.5]) from the delayed branch.

    The half-chip delay moves a down-chirp peak up by half a bin and an
    up-chirp peak down by half a bin, so the delayed branch reads

        down:  v[k - 0.5] = half[k],     v[k + 0.5] = half[k + 1]
        up:    v[k - 0.5] = half[k - 1], v[k + 0.5] = half[k]
    """
    m_count = len(half_all)
    if direction == "down":
        return complex(half_all[k]), complex(half_all[(k + 1) % m_count])
    return complex(half_all[(k - 1) % m_count]), complex(half_all[k])


def dtd(
    cfg: ModemConfig,
    y: np.ndarray,
    y_half: np.ndarray,
    direction: str = "up",
    data_symbol: bool = False,
) -> tuple[BinSpectrum, TimingEstimate]:
    """Demodulate one symbol and estimate its peak position.

    Parameters
    ----------
    y, y_half : ndarray
        M chips from the on-time and half-chip-delayed branches.
    direction : str
        "up" for data/up-preamble symbols, "down" for the down preamble.
    data_symbol : bool
        For payload symbols only the fractional offset is meaningful
        (the integer part is the symbol value), so tau_int is forced 0.

    Returns
    -------
    (BinSpectrum, TimingEstimate)
        The estimate is the spectral peak position: tau + eps for a down
        chirp, eps - tau for an up chirp, both relative to bin 0 (or to
        the symbol value for payload symbols).
    """
    m_count = cfg.m_count
    bins = dft_bins(dechirp(cfg, y, direction))
    k = int(np.argmax(np.abs(bins)))
    if data_symbol:
        # Only the two neighbour bins matter, so skip the full transform.
        rows = _dft_rows(cfg, direction)
        if direction == "down":
            v_minus = complex(rows[k] @ y_half)
            v_plus = complex(rows[(k + 1) % m_count] @ y_half)
        else:
            v_minus = complex(rows[(k - 1) % m_count] @ y_half)
            v_plus = complex(rows[k] @ y_half)
        half_all = None
    else:
        half_all = dft_bins(dechirp(cfg, y_half, direction))
        v_minus, v_plus = _half_neighbours(half_all, k, direction)
    frac = parabolic_frac(abs(v_minus), abs(bins[k]), abs(v_plus))
    tau_int = 0 if data_symbol else signed_bin(k, m_count)
    spec = BinSpectrum(bins=bins, peak_index=k, half_bins=(v_minus, v_plus), half_all=half_all)
    return spec, TimingEstimate(tau_int=tau_int, tau_frac=frac)


def _power_sum_peak(specs: list[BinSpectrum], direction: str, m_count: int) -> float:
    """Peak position from non-coherently combined preamble spectra.

    Power-summing per repeat discards the CFO-dependent inter-repeat
    rotation; magnitudes for the parabolic fit are square roots of the
    summed powers.
    """
    p_main = np.zeros(m_count)
    p_half = np.zeros(m_count)
    for s in specs:
        p_main += np.abs(s.bins) ** 2
        if s.half_all is None:
            raise ValueError("coarse estimation needs full half-branch spectra")
        p_half += np.abs(s.half_all) ** 2
    mag_main = np.sqrt(p_main)
    mag_half = np.sqrt(p_half)
    k = int(np.argmax(mag_main))
    v_minus, v_plus = _half_neighbours(mag_half, k, direction)
    frac = parabolic_frac(abs(v_minus), mag_main[k], abs(v_plus))
    return signed_bin(k, m_count) + frac


def coarse_estimate(
    cfg: ModemConfig,
    down_specs: list[BinSpectrum],
    up_specs: list[BinSpectrum],
) -> CoarseSync:
    """Separate timing and CFO from the two preamble measurements.

    tau_down ~ tau + eps and tau_up ~ eps - tau, hence
    tau = (tau_down - tau_up) / 2 and eps = (tau_down + tau_up) / 2.
    """
    tau_down = _power_sum_peak(down_specs, "down", cfg.m_count)
    tau_up = _power_sum_peak(up_specs, "up", cfg.m_count)
    return CoarseSync(
        tau_ui=0.5 * (tau_down - tau_up),
        eps_ui=0.5 * (tau_down + tau_up),
        tau_down=tau_down,
        tau_up=tau_up,
    )


def smod(a: float, b: float) -> float:
    """Symmetric modulo: a - round(a / b) * b, halves away from zero.

    The result lies in [-b/2, b/2]; used to fold PSK phase steps out of
    the phase detector output.
    """
    return a - round_half_away(a / b) * b


def phase_detect(spec: BinSpectrum, psi_ref: float, q: int = 1, k: int | None = None) -> float:
    """Phase error of bin k (default: the peak) against a reference, in cycles.

    psi_ref (radians) collects everything deterministic: the tracked
    phase estimate plus the chirp term of the detected bin.  The result
    is folded to [-1/(2q), 1/(2q)] so PSK modulation drops out.
    """
    if k is None:
        k = spec.peak_index
    err = float(np.angle(spec.bins[k] * np.exp(-1j * psi_ref))) / (2.0 * np.pi)
    return smod(err, 1.0 / q)


def sigma_phi_sq(psnr_db: float) -> float:
    """Variance of the peak-bin phase in cycles^2 at a given peak SNR."""
    return 0.5 * 10.0 ** (-psnr_db / 10.0) / (2.0 * np.pi) ** 2


class TimingLoop:
    """First-order timing accumulator with gain 1/s.

    With white detector noise this reproduces the running average
    tau_hat[s] = tau + (1/s) * sum(w[1..s]), an unbiased estimate whose
    MSE decays as sigma^2 / s.
    """

    def __init__(self, seed_tau: float = 0.0):
        self.tau_hat = float(seed_tau)
        self.s = 1

    def update(self, e_tau: float) -> float:
        self.tau_hat += e_tau / self.s
        self.s += 1
        return self.tau_hat


DEFAULT_PROCESS_NOISE = (1e-10, 1e-12)


class PhaseLoop:
    """Second-order phase/frequency tracker with Kalman-scheduled gains.

    State x = [phase (cycles), frequency (cycles/symbol)] advances by
    F = [[1, 1], [0, 1]] per symbol; the phase detector observes the
    phase component with variance r = sigma_phi_sq.  update() performs
    the measurement update for the current symbol and then predicts the
    next one, returning the filtered state.
    """

    F = np.array([[1.0, 1.0], [0.0, 1.0]])
    H = np.array([1.0, 0.0])

    def __init__(
        self,
        seed_phase: float,
        seed_freq: float,
        sigma_phi2: float,
        sigma_f2: float,
        process_noise: tuple[float, float] = DEFAULT_PROCESS_NOISE,
    ):
        self.x = np.array([float(seed_phase), float(seed_freq)])
        self.P = np.diag([float(sigma_phi2), float(sigma_f2)])
        self.r = float(sigma_phi2)
        self.Q = np.diag(process_noise)
        self.last_gain = np.zeros(2)

    @property
    def phase_pred(self) -> float:
        """Predicted phase for the symbol about to be measured (cycles)."""
        return float(self.x[0])

    @property
    def freq(self) -> float:
        """Current frequency estimate (cycles/symbol = residual UI)."""
        return float(self.x[1])

    def update(self, e_phi: float) -> tuple[float, float]:
        p00, p01 = self.P[0, 0], self.P[0, 1]
        p10, p11 = self.P[1, 0], self.P[1, 1]
        s = p00 + self.r
        kp = p00 / s
        ki = p10 / s
        self.last_gain = np.array([kp, ki])
        phi = self.x[0] + kp * e_phi
        f = self.x[1] + ki * e_phi
        filtered = (float(phi), float(f))
        # (I - K H) P, expanded: row 0 scaled by (1 - kp), row 1 minus ki*row 0.
        a00 = (1.0 - kp) * p00
        a01 = (1.0 - kp) * p01
        a10 = p10 - ki * p00
        a11 = p11 - ki * p01
        # F A F^T with F = [[1, 1], [0, 1]], then symmetrize against drift.
        b01 = a01 + a11
        b10 = a10 + a11
        off = 0.5 * (b01 + b10)
        self.P[0, 0] = a00 + a01 + a10 + a11 + self.Q[0, 0]
        self.P[0, 1] = off
        self.P[1, 0] = off
        self.P[1, 1] = a11 + self.Q[1, 1]
        self.x[0] = phi + f
        self.x[1] = f
        return filtered
