"""Core configuration and sample types shared by every stage of the chain.

A burst is built from M = 2**sf chips per symbol at the baseband rate B
(one sample per chip).  All timing quantities are expressed in chip
intervals (UI), frequency offsets in UI as well (offset_hz * M / B), and
oversampled streams carry an explicit rate tag so stages cannot be wired
together at the wrong rate by accident.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class SampleRate(Enum):
    """Rate tag for IQ buffers."""

    BASEBAND_1X = "baseband_1x"
    HALF_SHIFT_2X = "half_shift_2x"
    OVERSAMPLED_LX = "oversampled_lx"


@dataclass
class IqBuffer:
    """Complex sample vector plus the rate it was produced at."""

    samples: np.ndarray
    rate: SampleRate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class CssSymbol:
    """One transmitted symbol: cyclic shift m, optional PSK index p."""

    m: int
    p: int = 0


@dataclass(frozen=True)
class ModemConfig:
    """Static parameters of one link configuration.

    Parameters
    ----------
    sf : int
        Spreading factor, M = 2**sf chips per symbol.
    bandwidth_hz : float
        Occupied bandwidth B; also the baseband sample rate.
    oversample : int
        Simulation oversampling factor L (transmit/channel rate = L*B).
    psk_order : int
        PSK constellation size Q riding on each chirp (1 = plain CSS).
    n_down, n_up : int
        Number of down/up chirps in the preamble.
    n_cp : int
        Cyclic prefix length in chips before each preamble half.  Defaults
        to M // 2, which comfortably covers the shaping filter span.
    data_symbols : int
        Payload symbols per burst.
    rolloff : float
        Root raised cosine rolloff of the shaping filters.
    srrc_order : int
        Shaping filter span in chips (taps = srrc_order * 2 + 1 at rate 2).
    noncoherent_head : int
        Leading payload symbols detected non-coherently while the phase
        loop converges; PSK starts after this head.
    """

    sf: int
    bandwidth_hz: float = 125e3
    oversample: int = 2
    psk_order: int = 1
    n_down: int = 8
    n_up: int = 8
    n_cp: int = 0
    data_symbols: int = 256
    rolloff: float = 0.25
    srrc_order: int = 16
    noncoherent_head: int = 16

    def __post_init__(self) -> None:
        if not 5 <= self.sf <= 12:
            raise ValueError(f"sf must be in [5, 12], got {self.sf}")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.oversample < 2:
            raise ValueError("oversample must be at least 2")
        if self.psk_order < 1 or self.psk_order & (self.psk_order - 1):
            raise ValueError("psk_order must be a power of two")
        if self.srrc_order <= 0 or self.srrc_order % 2:
            raise ValueError("srrc_order must be a positive even integer")
        if not 0.0 < self.rolloff < 1.0:
            raise ValueError("rolloff must be in (0, 1)")
        if self.n_cp == 0:
            object.__setattr__(self, "n_cp", self.m_count // 2)
        if self.n_cp < self.srrc_order + 1:
            raise ValueError("n_cp must cover the shaping filter span")

    @property
    def m_count(self) -> int:
        return 1 << self.sf

    @property
    def sample_rate_hz(self) -> float:
        """Rate of the oversampled stream (chip rate B times L)."""
        return self.oversample * self.bandwidth_hz

    @property
    def preamble_len(self) -> int:
        """Preamble length in chips including both cyclic prefixes."""
        return self.m_count * (self.n_down + self.n_up) + 2 * self.n_cp

    @property
    def burst_len(self) -> int:
        """Burst length in chips (preamble plus payload)."""
        return self.preamble_len + self.data_symbols * self.m_count

    @property
    def head_bits(self) -> int:
        return self.sf

    @property
    def tail_bits(self) -> int:
        return self.sf + (self.psk_order.bit_length() - 1)

    @property
    def bits_per_burst(self) -> int:
        head = min(self.noncoherent_head, self.data_symbols)
        return head * self.head_bits + (self.data_symbols - head) * self.tail_bits

    @property
    def avg_bits_per_symbol(self) -> float:
        return self.bits_per_burst / self.data_symbols


def round_half_away(x: float) -> int:
    """Round to nearest integer with halves away from zero.

    Both numpy and builtin round() use banker's rounding, which would make
    boundary decisions depend on parity.
    """
    return int(np.trunc(x + np.copysign(0.5, x)))
