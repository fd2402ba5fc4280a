"""Burst assembly and the three receiver flavours.

The chain is transmit -> apply_channel -> receive_*.  Every filtering
stage trims its own group delay, so sample 2n of the receiver's 2x
stream nominally lines up with chip n of the transmitted burst and only
the channel's fractional offsets remain to be estimated.

Receivers:

* receive_noncoherent: coarse preamble sync, one-shot timing/CFO
  correction, magnitude detection.  corrections=False degrades it to a
  frame-aligned demodulator for baseline comparisons.
* receive_coherent: adds decision-directed timing and phase/frequency
  tracking loops and phase-coherent detection (plus PSK decoding).
* receive_ideal: inverts the exact channel parameters, bounding what any
  estimator can achieve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, snr_db_to_n0
from .chirp import (
    basic_chirp,
    chirp_phase,
    detect_coherent,
    detect_noncoherent,
    dft_bins,
    down_chirp,
    psnr_db,
    symbol_chirp,
    theta_rotator,
)
from .filters import (
    FarrowInterpolator,
    apply_fir,
    design_srrc,
    farrow_shift,
    fractional_delay,
    matched_front_end,
)
from .modem import CssSymbol, IqBuffer, ModemConfig, SampleRate
from .sync import (
    BinSpectrum,
    CoarseSync,
    PhaseLoop,
    TimingLoop,
    build_preamble,
    coarse_estimate,
    dtd,
    phase_detect,
    sigma_phi_sq,
)

TWO_PI = 2.0 * np.pi

# Assumed SNR when the caller does not provide one; only scales the
# phase loop's initial covariance, so a rough value is fine.
DEFAULT_LOOP_SNR_DB = 60.0


@dataclass(frozen=True)
class Burst:
    """Payload symbols of one burst."""

    symbols: tuple[CssSymbol, ...]

    def validate(self, cfg: ModemConfig) -> None:
        if len(self.symbols) != cfg.data_symbols:
            raise ValueError(
                f"burst has {len(self.symbols)} symbols, config wants {cfg.data_symbols}"
            )
        for i, sym in enumerate(self.symbols):
            if not 0 <= sym.m < cfg.m_count:
                raise ValueError(f"symbol {i}: m={sym.m} outside [0, {cfg.m_count})")
            if not 0 <= sym.p < cfg.psk_order:
                raise ValueError(f"symbol {i}: p={sym.p} outside [0, {cfg.psk_order})")
            if i < cfg.noncoherent_head and sym.p:
                raise ValueError(f"symbol {i} is in the non-coherent head but has p != 0")


@dataclass
class BurstReport:
    """Decoder output plus whatever diagnostics the receiver produced."""

    symbols: list[CssSymbol]
    coarse: CoarseSync | None = None
    sync_ok: bool = True
    bit_errors: int | None = None
    symbol_errors: int | None = None
    traces: dict[str, np.ndarray] | None = None


def random_burst(cfg: ModemConfig, rng: np.random.Generator) -> Burst:
    """Uniform random payload honouring the non-coherent head."""
    ms = rng.integers(0, cfg.m_count, cfg.data_symbols)
    if cfg.psk_order > 1:
        ps = rng.integers(0, cfg.psk_order, cfg.data_symbols)
        ps[: cfg.noncoherent_head] = 0
    else:
        ps = np.zeros(cfg.data_symbols, dtype=int)
    return Burst(symbols=tuple(CssSymbol(int(m), int(p)) for m, p in zip(ms, ps)))


def _gray(x: int) -> int:
    return x ^ (x >> 1)


def symbol_bit_errors(cfg: ModemConfig, index: int, ref: CssSymbol, hat: CssSymbol) -> int:
    """Hamming distance between transmitted and decoded bits of one symbol.

    The cyclic shift maps to sf natural-binary bits; the PSK index (for
    symbols past the head) maps through a Gray code so adjacent phase
    decisions cost one bit.
    """
    errs = ((ref.m ^ hat.m) & (cfg.m_count - 1)).bit_count()
    if cfg.psk_order > 1 and index >= cfg.noncoherent_head:
        errs += (_gray(ref.p) ^ _gray(hat.p)).bit_count()
    return errs


def count_errors(cfg: ModemConfig, ref: Burst, hat: list[CssSymbol]) -> tuple[int, int]:
    """(bit errors, symbol errors) of a decoded burst against its reference."""
    bit_errs = 0
    sym_errs = 0
    for i, (r, h) in enumerate(zip(ref.symbols, hat)):
        e = symbol_bit_errors(cfg, i, r, h)
        bit_errs += e
        if e:
            sym_errs += 1
    return bit_errs, sym_errs


def transmit(cfg: ModemConfig, burst: Burst) -> IqBuffer:
    """Shape one burst to the oversampled rate.

    Baseband chips (preamble then payload chirps) are zero-stuffed to
    L times the chip rate and shaped with the root raised cosine.  The
    filter's leading delay is trimmed so the stream starts at the nominal
    burst start; the trailing filter tail is kept.
    """
    burst.validate(cfg)
    chips = np.concatenate(
        [build_preamble(cfg)] + [symbol_chirp(cfg, sym) for sym in burst.symbols]
    )
    ell = cfg.oversample
    up = np.zeros(len(chips) * ell, dtype=complex)
    up[::ell] = chips
    srrc = design_srrc(cfg.rolloff, cfg.srrc_order, ell)
    shaped = apply_fir(up, srrc)
    return IqBuffer(samples=shaped, rate=SampleRate.OVERSAMPLED_LX)


# ---------------------------------------------------------------------------
# receiver internals


def _front_end_2x(cfg: ModemConfig, iq: IqBuffer) -> np.ndarray:
    if iq.rate is not SampleRate.OVERSAMPLED_LX:
        raise ValueError("receiver expects the oversampled channel output")
    srrc = design_srrc(cfg.rolloff, cfg.srrc_order, 2)
    y2 = matched_front_end(iq.samples, cfg.oversample, srrc)
    # A capture with mismatched geometry (wrong data_symbols, preamble
    # lengths...) would otherwise die deep in the symbol loop.
    need = 2 * (cfg.preamble_len + cfg.data_symbols * cfg.m_count)
    if len(y2) < need:
        raise ValueError(
            f"capture too short for the configured burst: {len(y2)} half-chip "
            f"samples, geometry wants {need}; check data_symbols and the "
            f"preamble settings against how the capture was made"
        )
    return y2


def _branches_at(rx2: np.ndarray, start_ui: int, m_count: int) -> tuple[np.ndarray, np.ndarray]:
    """On-time and half-chip-delayed branches of one symbol window."""
    base = 2 * start_ui
    a = rx2[base : base + 2 * m_count : 2]
    b = rx2[base - 1 : base - 1 + 2 * m_count : 2]
    return a, b


def _preamble_spectra(
    cfg: ModemConfig, rx2: np.ndarray
) -> tuple[list[BinSpectrum], list[BinSpectrum]]:
    m = cfg.m_count
    down_specs = []
    up_specs = []
    for b in range(cfg.n_down):
        ya, yb = _branches_at(rx2, cfg.n_cp + b * m, m)
        spec, _ = dtd(cfg, ya, yb, direction="down")
        down_specs.append(spec)
    up0 = 2 * cfg.n_cp + cfg.n_down * m
    for b in range(cfg.n_up):
        ya, yb = _branches_at(rx2, up0 + b * m, m)
        spec, _ = dtd(cfg, ya, yb, direction="up")
        up_specs.append(spec)
    return down_specs, up_specs


def _derotate(cfg: ModemConfig, rx2: np.ndarray, eps_hat: float) -> np.ndarray:
    """Remove the coarse CFO as a continuous ramp anchored at data start."""
    n = np.arange(len(rx2)) - 2 * cfg.preamble_len
    return rx2 * np.exp(-1j * TWO_PI * eps_hat * n / (2 * cfg.m_count))


_FARROW = FarrowInterpolator(order=5)


def _shifted_branches(
    rx2: np.ndarray, start_ui: int, m_count: int, shift2: float
) -> tuple[np.ndarray, np.ndarray]:
    """Symbol branches sampled with a fractional timing advance.

    Evaluates y(base + j + shift2) for j = -1 .. 2M-1 with the Lagrange
    kernel and splits the result into the two half-chip branches.
    """
    base = 2 * start_ui
    n_int = int(np.floor(shift2))
    frac = shift2 - n_int
    c = _FARROW.coefficients(frac)
    half = _FARROW.order // 2
    lo = base - 1 + n_int - half
    seg = rx2[lo : lo + 2 * m_count + 1 + _FARROW.order]
    y = np.zeros(2 * m_count + 1, dtype=complex)
    for i, ci in enumerate(c):
        y += ci * seg[i : i + 2 * m_count + 1]
    return y[1::2], y[0::2][:m_count]


def _init_phase_loop(
    cfg: ModemConfig,
    rx2c: np.ndarray,
    coarse: CoarseSync,
    snr_db: float | None,
    x0_conj: np.ndarray,
) -> PhaseLoop:
    """Seed the phase/frequency tracker from the last preamble symbol.

    The seed symbol is pushed through the same corrections as payload
    symbols (coarse timing shift, coarse CFO already removed from rx2c),
    de-chirped, and the chirp term of its peak bin stripped.  The
    frequency state starts at zero because rx2c is already de-rotated by
    eps_coarse; the loop tracks only the residual.
    """
    m = cfg.m_count
    seed_start = 2 * cfg.n_cp + cfg.n_down * m + (cfg.n_up - 1) * m
    ya, yb = _shifted_branches(rx2c, seed_start, m, 2.0 * coarse.tau_ui)
    bins = dft_bins(ya * x0_conj)
    k = int(np.argmax(np.abs(bins)))
    seed_phase = float(np.angle(bins[k] * np.exp(-1j * chirp_phase(cfg, k)))) / TWO_PI
    n0 = snr_db_to_n0(snr_db if snr_db is not None else DEFAULT_LOOP_SNR_DB)
    s2_phi = sigma_phi_sq(psnr_db(cfg, n0))
    return PhaseLoop(
        seed_phase=seed_phase,
        seed_freq=0.0,
        sigma_phi2=s2_phi,
        sigma_f2=s2_phi / (cfg.n_down + cfg.n_up),
    )


def _batch_payload_bins(cfg: ModemConfig, rx2: np.ndarray) -> np.ndarray:
    """De-chirped unitary DFTs of all payload symbols, shape (N, M)."""
    m = cfg.m_count
    base = 2 * cfg.preamble_len
    n_data = cfg.data_symbols
    starts = base + 2 * m * np.arange(n_data)[:, None]
    idx = starts + 2 * np.arange(m)
    blocks = rx2[idx]
    u = blocks * down_chirp(cfg)
    return np.fft.fft(u, axis=1) / np.sqrt(m)


def _batch_detect_coherent(
    cfg: ModemConfig, bins: np.ndarray, psi_hat: float
) -> list[CssSymbol]:
    """Vectorized coherent detection over payload rows (known phase).

    Head symbols carry no PSK bits, so their metric stays the plain real
    part; tail bins are rotated to the nearest constellation point first
    (the joint ML metric over shift and PSK index).
    """
    rot = bins * theta_rotator(cfg) * np.exp(-1j * psi_hat)
    if cfg.psk_order == 1:
        return [CssSymbol(int(mh)) for mh in np.argmax(rot.real, axis=1)]
    q = cfg.psk_order
    head = min(cfg.noncoherent_head, len(rot))
    scaled = q * np.angle(rot) / TWO_PI
    p_near = np.trunc(scaled + np.copysign(0.5, scaled))
    w = TWO_PI * p_near / q
    metric = rot.real * np.cos(w) + rot.imag * np.sin(w)
    out = [CssSymbol(int(mh)) for mh in np.argmax(rot.real[:head], axis=1)]
    m_tail = np.argmax(metric[head:], axis=1)
    p_tail = p_near[np.arange(head, len(rot)), m_tail].astype(int) % q
    out.extend(CssSymbol(int(mh), int(ph)) for mh, ph in zip(m_tail, p_tail))
    return out


def _finish_report(
    cfg: ModemConfig,
    symbols: list[CssSymbol],
    ref: Burst | None,
    coarse: CoarseSync | None,
    sync_ok: bool,
    traces: dict[str, np.ndarray] | None = None,
) -> BurstReport:
    report = BurstReport(symbols=symbols, coarse=coarse, sync_ok=sync_ok, traces=traces)
    if ref is not None:
        report.bit_errors, report.symbol_errors = count_errors(cfg, ref, symbols)
    return report


def _timing_sample_ok(decided_m: int, peak_index: int, tau_frac: float) -> bool:
    """Validity gate for one payload timing sample.

    A payload symbol can only legitimately measure a fractional offset,
    so the sample is usable only when its implied integer offset is
    zero: the decision agrees with the timing branch's peak bin and the
    parabola vertex stayed inside the half-sample span.  Anything else
    indicates a demod error; such samples are dropped (gated to zero)
    rather than allowed to walk the accumulator toward a neighbouring
    bin, which is what turns one bad detection into a whole-burst loss
    of lock.
    """
    return decided_m == peak_index and abs(tau_frac) <= 0.5


# ---------------------------------------------------------------------------
# receivers


def receive_noncoherent(
    cfg: ModemConfig,
    iq: IqBuffer,
    ref: Burst | None = None,
    corrections: bool = True,
) -> BurstReport:
    """Coarse-synchronized magnitude detection.

    With corrections enabled the coarse timing estimate is applied as one
    Farrow shift of the whole stream and the coarse CFO as one phase
    ramp.  A burst whose coarse estimates fall outside the plausible
    acquisition range is flagged sync_ok=False but still decoded.
    """
    rx2 = _front_end_2x(cfg, iq)
    coarse = None
    sync_ok = True
    if corrections:
        down_specs, up_specs = _preamble_spectra(cfg, rx2)
        coarse = coarse_estimate(cfg, down_specs, up_specs)
        sync_ok = coarse.plausible
        rx2 = _derotate(cfg, rx2, coarse.eps_ui)
        rx2 = farrow_shift(_FARROW, rx2, -2.0 * coarse.tau_ui)
    bins = _batch_payload_bins(cfg, rx2)
    symbols = [CssSymbol(int(k)) for k in np.argmax(np.abs(bins), axis=1)]
    return _finish_report(cfg, symbols, ref, coarse, sync_ok)


def receive_coherent(
    cfg: ModemConfig,
    iq: IqBuffer,
    ref: Burst | None = None,
    snr_db: float | None = None,
    record_traces: bool = False,
) -> BurstReport:
    """Tracking receiver: coarse sync, then per-symbol loop corrections.

    Payload symbols are processed in order.  Each one is resampled at the
    current timing estimate, de-rotated by the current frequency
    estimate, detected (non-coherently for the first noncoherent_head
    symbols, coherently after), and the detected symbol then drives the
    timing and phase loop updates for the next symbol.

    snr_db sizes the phase loop's initial covariance; pass the operating
    point when known.

    With record_traces the report carries per-symbol arrays indexed by
    payload symbol: tau_hat (timing estimate, UI), freq_hat (frequency
    state plus the coarse CFO, UI/symbol), nco_freq (frequency the phase
    corrector applies across the symbol, i.e. the phase-prediction
    advance plus the coarse CFO), phi_hat (filtered phase, cycles) and
    e_phi (detector phase error, cycles).
    """
    m = cfg.m_count
    rx2 = _front_end_2x(cfg, iq)
    down_specs, up_specs = _preamble_spectra(cfg, rx2)
    coarse = coarse_estimate(cfg, down_specs, up_specs)
    rx2c = _derotate(cfg, rx2, coarse.eps_ui)

    x0_conj = down_chirp(cfg)
    theta = chirp_phase(cfg, np.arange(m))

    timing = TimingLoop(seed_tau=coarse.tau_ui)
    ploop = _init_phase_loop(cfg, rx2c, coarse, snr_db, x0_conj)

    n_data = cfg.data_symbols
    symbols: list[CssSymbol] = []
    tau_trace = np.empty(n_data) if record_traces else None
    freq_trace = np.empty(n_data) if record_traces else None
    nco_trace = np.empty(n_data) if record_traces else None
    phi_trace = np.empty(n_data) if record_traces else None
    ephi_trace = np.empty(n_data) if record_traces else None

    j_half = np.arange(-1, 2 * m)  # sample phase within the window, 2x rate

    for s in range(n_data):
        start_ui = cfg.preamble_len + s * m
        ya, yb = _shifted_branches(rx2c, start_ui, m, 2.0 * timing.tau_hat)
        f_res = ploop.freq
        if f_res != 0.0:
            nco = np.exp(-1j * TWO_PI * f_res * (j_half - (m - 1)) / (2 * m))
            ya = ya * nco[1::2]
            yb = yb * nco[0::2][:m]
        spec, est = dtd(cfg, ya, yb, direction="up", data_symbol=True)

        phi_pred = ploop.phase_pred
        if s < cfg.noncoherent_head or cfg.psk_order == 1:
            q_eff = 1
        else:
            q_eff = cfg.psk_order
        if s < cfg.noncoherent_head:
            sym = CssSymbol(detect_noncoherent(spec.bins))
        else:
            sym = detect_coherent(cfg, spec.bins, TWO_PI * phi_pred)
        symbols.append(sym)

        psi_ref = float(theta[sym.m]) + TWO_PI * phi_pred
        e_phi = phase_detect(spec, psi_ref, q_eff, k=sym.m)
        # An up-chirp peak moves by minus the timing error, so the loop
        # error is the negated fractional measurement.
        if _timing_sample_ok(sym.m, spec.peak_index, est.tau_frac):
            timing.update(-est.tau_frac)
        else:
            # Demod-error indication: advance the schedule, add nothing.
            timing.update(0.0)
        p_filt, f_filt = ploop.update(e_phi)

        if record_traces:
            tau_trace[s] = timing.tau_hat
            freq_trace[s] = coarse.eps_ui + f_filt
            # Frequency the corrector actually applies across this symbol:
            # the advance of the phase prediction, which folds the
            # proportional phase step in with the frequency state.
            nco_trace[s] = coarse.eps_ui + (ploop.phase_pred - phi_pred)
            phi_trace[s] = p_filt
            ephi_trace[s] = e_phi

    traces = None
    if record_traces:
        traces = {
            "tau_hat": tau_trace,
            "freq_hat": freq_trace,
            "nco_freq": nco_trace,
            "phi_hat": phi_trace,
            "e_phi": ephi_trace,
        }
    return _finish_report(cfg, symbols, ref, coarse, coarse.plausible, traces)


def receive_ideal(
    cfg: ModemConfig,
    iq: IqBuffer,
    params: ChannelParams,
    mode: str = "noncoherent",
    ref: Burst | None = None,
) -> BurstReport:
    """Genie receiver: undo the exact channel, then detect.

    Inverts the channel operations in reverse order (phase, CFO ramp,
    fractional delay) using the channel-side delay kernel, so the only
    degradation left is noise.  mode selects magnitude or known-phase
    coherent detection; the latter also decodes PSK.
    """
    if iq.rate is not SampleRate.OVERSAMPLED_LX:
        raise ValueError("receiver expects the oversampled channel output")
    ell = cfg.oversample
    y = iq.samples * np.exp(-1j * params.psi_rad)
    n = np.arange(len(y))
    y = y * np.exp(-1j * TWO_PI * params.eps_ui * n / (cfg.m_count * ell))
    y = fractional_delay(y, -params.tau_ui * ell)
    rx2 = _front_end_2x(cfg, IqBuffer(samples=y, rate=SampleRate.OVERSAMPLED_LX))
    bins = _batch_payload_bins(cfg, rx2)
    if mode == "noncoherent":
        symbols = [CssSymbol(int(k)) for k in np.argmax(np.abs(bins), axis=1)]
    elif mode == "coherent":
        symbols = _batch_detect_coherent(cfg, bins, psi_hat=0.0)
    else:
        raise ValueError(f"mode must be 'noncoherent' or 'coherent', got {mode!r}")
    return _finish_report(cfg, symbols, ref, None, True)
