"""Configuration arithmetic and the small shared value types."""

import numpy as np
import pytest

from csslink import CssSymbol, IqBuffer, ModemConfig
from csslink.modem import SampleRate, round_half_away


class TestConfigValidation:
    def test_sf_range(self):
        with pytest.raises(ValueError, match="sf"):
            ModemConfig(sf=4)
        with pytest.raises(ValueError, match="sf"):
            ModemConfig(sf=13)

    def test_oversample_floor(self):
        with pytest.raises(ValueError, match="oversample"):
            ModemConfig(sf=8, oversample=1)

    def test_psk_order_power_of_two(self):
        with pytest.raises(ValueError, match="psk_order"):
            ModemConfig(sf=8, psk_order=3)
        ModemConfig(sf=8, psk_order=4)  # fine

    def test_rolloff_open_interval(self):
        with pytest.raises(ValueError, match="rolloff"):
            ModemConfig(sf=8, rolloff=0.0)
        with pytest.raises(ValueError, match="rolloff"):
            ModemConfig(sf=8, rolloff=1.0)

    def test_srrc_order_even_positive(self):
        with pytest.raises(ValueError, match="srrc_order"):
            ModemConfig(sf=8, srrc_order=15)
        with pytest.raises(ValueError, match="srrc_order"):
            ModemConfig(sf=8, srrc_order=0)

    def test_cp_must_cover_filter_span(self):
        with pytest.raises(ValueError, match="n_cp"):
            ModemConfig(sf=8, n_cp=8, srrc_order=16)


def test_cp_defaults_to_half_symbol():
    cfg = ModemConfig(sf=8)
    assert cfg.n_cp == 128
    assert ModemConfig(sf=10).n_cp == 512


def test_length_bookkeeping():
    cfg = ModemConfig(sf=8)
    assert cfg.m_count == 256
    assert cfg.preamble_len == 256 * 16 + 2 * 128
    assert cfg.burst_len == cfg.preamble_len + 256 * 256


def test_bit_accounting_plain():
    cfg = ModemConfig(sf=8)
    assert cfg.head_bits == 8
    assert cfg.tail_bits == 8
    assert cfg.bits_per_burst == 256 * 8
    assert cfg.avg_bits_per_symbol == 8.0


def test_bit_accounting_psk():
    cfg = ModemConfig(sf=8, psk_order=4)
    # 16 head symbols carry sf bits, the remaining 240 carry sf + 2.
    assert cfg.bits_per_burst == 16 * 8 + 240 * 10
    assert cfg.avg_bits_per_symbol == 9.875


def test_rate_improvement_is_exact():
    """PSK payload bits raise the rate by an exact binary fraction."""
    sf8 = ModemConfig(sf=8, psk_order=4)
    sf10 = ModemConfig(sf=10, psk_order=4)
    assert sf8.avg_bits_per_symbol / 8 == 1.234375
    assert sf10.avg_bits_per_symbol / 10 == 1.1875
    assert round(100 * sf8.avg_bits_per_symbol / 8, 2) == 123.44
    assert round(100 * sf10.avg_bits_per_symbol / 10, 2) == 118.75


def test_head_never_exceeds_payload():
    cfg = ModemConfig(sf=8, psk_order=4, data_symbols=8, noncoherent_head=16)
    assert cfg.bits_per_burst == 8 * 8


def test_symbol_defaults():
    s = CssSymbol(m=17)
    assert s.p == 0
    with pytest.raises(AttributeError):
        s.m = 3  # frozen


def test_iq_buffer_len():
    buf = IqBuffer(samples=np.zeros(7, dtype=complex), rate=SampleRate.BASEBAND_1X)
    assert len(buf) == 7


@pytest.mark.parametrize(
    "x,expected",
    [(0.5, 1), (-0.5, -1), (1.5, 2), (-1.5, -2), (2.5, 3), (0.49, 0), (-0.49, 0), (0.0, 0)],
)
def test_round_half_away(x, expected):
    assert round_half_away(x) == expected


def test_round_half_away_differs_from_bankers():
    # The builtin rounds 0.5 to 0; decision boundaries must not do that.
    assert round(0.5) == 0
    assert round_half_away(0.5) == 1
