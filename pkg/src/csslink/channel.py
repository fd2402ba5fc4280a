"""Impairment channel: fractional delay, CFO, phase rotation, AWGN.

The channel operates on the oversampled transmit stream.  Timing and
frequency offsets are expressed in chip intervals (UI): a frequency
offset of eps UI advances the carrier phase by eps / M cycles per chip,
i.e. offset_hz = eps * B / M.  Noise is calibrated closed loop against
the receive chain so that the post-matched-filter baseband variance
equals N0 = 10 ** (-snr_db / 10) regardless of filter choices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filters import apply_fir, design_srrc, fractional_delay, matched_front_end
from .modem import IqBuffer, ModemConfig, SampleRate

_NOISE_GAIN_CACHE: dict[tuple, float] = {}
_NOISE_GAIN_SAMPLES = 1 << 20


@dataclass(frozen=True)
class ChannelParams:
    """One burst's worth of channel state.

    tau_ui and eps_ui are the fractional timing and frequency offsets in
    chip intervals, psi_rad the carrier phase.  snr_db None means
    noiseless.  seed feeds a private generator when no rng is passed to
    apply_channel.
    """

    tau_ui: float = 0.0
    eps_ui: float = 0.0
    psi_rad: float = 0.0
    snr_db: float | None = None
    seed: int | None = None


def snr_db_to_n0(snr_db: float) -> float:
    """Noise variance per baseband sample for a unit-power signal."""
    return 10.0 ** (-snr_db / 10.0)


def ebn0_to_snr_db(cfg: ModemConfig, ebn0_db: float) -> float:
    """Convert Eb/N0 to per-sample SNR: one symbol spreads its bits over M chips."""
    return ebn0_db - 10.0 * np.log10(cfg.m_count / cfg.avg_bits_per_symbol)


def snr_to_ebn0_db(cfg: ModemConfig, snr_db: float) -> float:
    return snr_db + 10.0 * np.log10(cfg.m_count / cfg.avg_bits_per_symbol)


def offset_hz_to_eps_ui(cfg: ModemConfig, offset_hz: float) -> float:
    """Carrier offset in Hz to UI: eps = M * offset / B."""
    return cfg.m_count * offset_hz / cfg.bandwidth_hz


def eps_ui_to_offset_hz(cfg: ModemConfig, eps_ui: float) -> float:
    return eps_ui * cfg.bandwidth_hz / cfg.m_count


def _front_end_noise_gain(cfg: ModemConfig) -> float:
    """Measured variance gain of the receive chain for white input noise.

    Unit-variance complex noise at the oversampled rate is pushed through
    the actual decimation and matched filter chain and the surviving
    variance on the chip-rate grid is measured once and cached.
    """
    key = (cfg.oversample, cfg.rolloff, cfg.srrc_order)
    if key not in _NOISE_GAIN_CACHE:
        rng = np.random.default_rng(0x5EEDCA1)
        n = _NOISE_GAIN_SAMPLES
        w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        srrc = design_srrc(cfg.rolloff, cfg.srrc_order, 2)
        y2 = matched_front_end(w, cfg.oversample, srrc)
        y1 = y2[0::2]
        guard = 4 * cfg.srrc_order
        _NOISE_GAIN_CACHE[key] = float(np.var(y1[guard:-guard]))
    return _NOISE_GAIN_CACHE[key]


def calibrate_noise(cfg: ModemConfig, snr_db: float) -> float:
    """Noise variance to inject at the oversampled rate.

    Chosen so the receive chain delivers exactly N0 variance per baseband
    sample, closing the loop over whatever filters are configured.
    """
    return snr_db_to_n0(snr_db) / _front_end_noise_gain(cfg)


def apply_channel(
    iq: IqBuffer,
    cfg: ModemConfig,
    params: ChannelParams,
    rng: np.random.Generator | None = None,
) -> IqBuffer:
    """Impair one oversampled burst.

    Applies, in order: fractional delay of tau_ui chips, a continuous CFO
    phase ramp anchored at the first sample of the buffer, the constant
    carrier phase, then calibrated AWGN.  Length grows by the delay
    kernel tail; nominal sample alignment is preserved.
    """
    if iq.rate is not SampleRate.OVERSAMPLED_LX:
        raise ValueError("apply_channel expects the oversampled transmit stream")
    ell = cfg.oversample
    x = fractional_delay(iq.samples, params.tau_ui * ell)
    n = np.arange(len(x))
    x = x * np.exp(1j * (2.0 * np.pi * params.eps_ui * n / (cfg.m_count * ell) + params.psi_rad))
    if params.snr_db is not None:
        if rng is None:
            rng = np.random.default_rng(params.seed)
        var = calibrate_noise(cfg, params.snr_db)
        noise = (rng.standard_normal(len(x)) + 1j * rng.standard_normal(len(x))) * np.sqrt(var / 2.0)
        x = x + noise
    return IqBuffer(samples=x, rate=SampleRate.OVERSAMPLED_LX)
