"""Pulse shaping, rate conversion and fractional-delay interpolation.

Two distinct fractional-delay paths exist on purpose.  The channel model
uses a long Kaiser-windowed sinc (`fractional_delay`) as a near-ideal
delay element, while the receiver uses a short Lagrange interpolator
(`FarrowInterpolator`) as a practical correction stage.  Keeping them
separate means the receiver is never tested against its own interpolator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal


@dataclass(frozen=True)
class FirFilter:
    """Designed FIR taps plus the metadata needed to reuse them."""

    taps: np.ndarray
    rate: int
    kind: str
    rolloff: float | None = None

    @property
    def delay(self) -> int:
        """Group delay in samples at the design rate (odd tap count)."""
        return (len(self.taps) - 1) // 2


def raised_cosine(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Raised cosine pulse h(t) = sinc(t) cos(pi b t) / (1 - (2 b t)^2).

    t is in chip intervals.  The removable singularities are patched
    explicitly: h(0) = 1 and h(+-1/(2b)) = (pi/4) sinc(1/(2b)).
    """
    t = np.asarray(t, dtype=float)
    b = rolloff
    out = np.empty_like(t)
    pole = np.isclose(np.abs(2.0 * b * t), 1.0)
    safe = ~pole
    ts = t[safe]
    out[safe] = np.sinc(ts) * np.cos(np.pi * b * ts) / (1.0 - (2.0 * b * ts) ** 2)
    out[pole] = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * b))
    return out


def root_raised_cosine(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Root raised cosine pulse, unnormalized closed form."""
    t = np.asarray(t, dtype=float)
    b = rolloff
    out = np.empty_like(t)
    zero = np.isclose(t, 0.0)
    pole = np.isclose(np.abs(4.0 * b * t), 1.0) & ~zero
    safe = ~zero & ~pole
    ts = t[safe]
    num = np.sin(np.pi * ts * (1.0 - b)) + 4.0 * b * ts * np.cos(np.pi * ts * (1.0 + b))
    den = np.pi * ts * (1.0 - (4.0 * b * ts) ** 2)
    out[safe] = num / den
    out[zero] = 1.0 - b + 4.0 * b / np.pi
    x = 1.0 / (4.0 * b)
    out[pole] = (b / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * b))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * b))
    )
    return out


def design_rc(rolloff: float, span: int, rate: int) -> FirFilter:
    """Raised cosine FIR over +-span/2 chips at `rate` samples per chip."""
    k = np.arange(-span * rate // 2, span * rate // 2 + 1)
    taps = raised_cosine(k / rate, rolloff)
    return FirFilter(taps=taps, rate=rate, kind="rc", rolloff=rolloff)


def design_srrc(rolloff: float, span: int, rate: int) -> FirFilter:
    """Unit-energy root raised cosine FIR (span * rate + 1 taps).

    With unit energy on both the transmit and receive side the cascaded
    response is a raised cosine with unit peak, so the end-to-end chip
    gain is one and no separate level calibration is needed.
    """
    k = np.arange(-span * rate // 2, span * rate // 2 + 1)
    taps = root_raised_cosine(k / rate, rolloff)
    taps = taps / np.sqrt(np.sum(taps**2))
    return FirFilter(taps=taps, rate=rate, kind="srrc", rolloff=rolloff)


def apply_fir(x: np.ndarray, fir: FirFilter) -> np.ndarray:
    """Filter and remove the group delay.

    Output length is len(x) + fir.delay: the nominal alignment of sample
    n is preserved and the filter tail is kept so later stages can read
    past the nominal end of the burst.
    """
    y = np.convolve(x, fir.taps, mode="full")
    return y[fir.delay:]


ANTI_ALIAS_TAPS_PER_PHASE = 24
ANTI_ALIAS_STOP_DB = 60.0


def _anti_alias(ratio: int) -> np.ndarray:
    """Windowed-sinc lowpass with cutoff 0.5/ratio of the fast rate."""
    numtaps = ANTI_ALIAS_TAPS_PER_PHASE * ratio + 1
    beta = signal.kaiser_beta(ANTI_ALIAS_STOP_DB)
    return signal.firwin(numtaps, 1.0 / ratio, window=("kaiser", beta))


def resample(x: np.ndarray, up: int, down: int) -> np.ndarray:
    """Integer-factor rate conversion with delay compensation.

    The anti-alias/anti-image filter cuts at half the slower rate with a
    60 dB stopband, so a tone inside the passband survives a 1x -> L -> 1x
    round trip essentially unchanged.
    """
    if up < 1 or down < 1:
        raise ValueError("up and down must be positive integers")
    if up == down:
        return x.copy()
    if up > 1 and down > 1:
        raise ValueError("only pure up or pure down conversion is supported")
    ratio = max(up, down)
    # Zero-stuffing spreads each sample's energy over `up` slots; the
    # interpolation filter restores the level.  Decimation keeps it.
    h = _anti_alias(ratio) * up
    y = signal.upfirdn(h, x, up=up, down=down)
    delay = (len(h) - 1) // 2
    if up > 1:
        return y[delay : delay + len(x) * up]
    return y[delay // down : delay // down + int(np.ceil(len(x) / down))]


FRACTIONAL_DELAY_TAPS = 65
FRACTIONAL_DELAY_BETA = 8.0


def fractional_delay(x: np.ndarray, delay: float) -> np.ndarray:
    """Near-ideal fractional delay by a Kaiser-windowed shifted sinc.

    Parameters
    ----------
    x : ndarray
        Input samples.
    delay : float
        Delay in samples at the rate of x; may be negative or > 1.
        Output approximates x(n - delay) with the kernel's own group
        delay removed, so delay = 0 returns x to machine precision.

    Notes
    -----
    Intended as the channel-side oracle delay: 65 taps keep the nominal
    group delay integer and the passband flat to well below the noise
    floors simulated here.  The integer part of the delay is moved by
    indexing so the windowed sinc only ever models a half-sample or less
    and keeps its accuracy for any delay magnitude.
    """
    n_int = int(np.round(delay))
    frac = delay - n_int
    c = (FRACTIONAL_DELAY_TAPS - 1) // 2
    k = np.arange(FRACTIONAL_DELAY_TAPS)
    win = np.kaiser(FRACTIONAL_DELAY_TAPS, FRACTIONAL_DELAY_BETA)
    h = np.sinc(k - c - frac) * win
    # Renormalize the window droop so a DC input keeps unit gain.
    h = h / np.sum(np.sinc(k - c) * win)
    z = np.convolve(x, h, mode="full")[c:]
    y = np.zeros_like(z)
    if n_int == 0:
        y = z
    elif n_int > 0:
        y[n_int:] = z[:-n_int]
    else:
        y[:n_int] = z[-n_int:]
    return y


@dataclass(frozen=True)
class FarrowInterpolator:
    """Odd-order Lagrange interpolator evaluated in Farrow form.

    order 5 interpolates on a 6-sample window, the standard choice for a
    2x-oversampled stream where the signal occupies at most ~0.31 of the
    sample rate.  The Lagrange basis is expanded once into a polynomial
    coefficient matrix so per-call evaluation is a single matrix-vector
    product in powers of the fractional offset.
    """

    order: int = 5

    def __post_init__(self) -> None:
        n = self.n_taps
        nodes = np.arange(n) - (self.order // 2)
        basis = np.empty((n, n))
        for i, ni in enumerate(nodes):
            others = nodes[nodes != ni]
            # np.poly returns highest power first; flip to ascending.
            poly = np.poly(others) / np.prod(ni - others)
            basis[i] = poly[::-1]
        basis.setflags(write=False)
        object.__setattr__(self, "_basis", basis)

    @property
    def n_taps(self) -> int:
        return self.order + 1

    def coefficients(self, frac: float) -> np.ndarray:
        """Lagrange basis weights for the point `frac` in [0, 1).

        The window spans offsets -order//2 .. order//2 + 1 around the
        interval being interpolated, so frac sits centrally.
        """
        powers = frac ** np.arange(self.n_taps)
        return self._basis @ powers


def farrow_shift(interp: FarrowInterpolator, x: np.ndarray, mu: float) -> np.ndarray:
    """Evaluate x(n - mu) for arbitrary real mu.

    The integer part of the shift is handled by re-indexing and the
    fractional remainder by the Lagrange kernel, so the interpolator
    always works at its best-conditioned operating point.  Samples whose
    window would leave the array are zero-filled.
    """
    t = -mu
    n_int = int(np.floor(t))
    frac = t - n_int
    c = interp.coefficients(frac)
    half = interp.order // 2
    n = len(x)
    y = np.zeros_like(x)
    for i, ci in enumerate(c):
        if ci == 0.0:
            continue
        off = n_int + i - half  # y[n] += ci * x[n + off]
        if off >= n or off <= -n:
            continue
        if off >= 0:
            y[: n - off] += ci * x[off:]
        else:
            y[-off:] += ci * x[: n + off]
    return y


def matched_front_end(x: np.ndarray, oversample: int, srrc: FirFilter) -> np.ndarray:
    """Receive chain from the oversampled rate down to the 2x stream.

    Decimates L -> 2 (identity when L == 2), then applies the matched
    root raised cosine with its delay removed.  The returned stream keeps
    sample 0 aligned with the nominal burst start.
    """
    if oversample < 2:
        raise ValueError("oversample must be at least 2")
    if oversample > 2:
        if oversample % 2:
            raise ValueError("oversample must be even to reach the 2x grid")
        x = resample(x, 1, oversample // 2)
    return apply_fir(x, srrc)


def half_sample_branches(x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a 2x stream into the on-time and half-chip-delayed branches.

    Branch a[n] = x2[2n] samples on the chip grid; branch b[n] = x2[2n-1]
    is the same grid half a chip earlier, i.e. the signal seen through an
    extra half-chip delay.  b[0] has no predecessor and is zero.
    """
    a = x2[0::2].copy()
    b = np.zeros_like(a)
    b[1:] = x2[1::2][: len(a) - 1]
    return a, b
