"""Chirp spread spectrum baseband: waveforms, sync, and link simulation."""

from .channel import (
    ChannelParams,
    apply_channel,
    calibrate_noise,
    ebn0_to_snr_db,
    eps_ui_to_offset_hz,
    offset_hz_to_eps_ui,
    snr_db_to_n0,
    snr_to_ebn0_db,
)
from .chirp import (
    basic_chirp,
    chirp_phase,
    dechirp,
    detect_coherent,
    detect_noncoherent,
    dft_bins,
    down_chirp,
    theta_rotator,
    psnr_db,
    symbol_chirp,
)
from .filters import (
    FarrowInterpolator,
    FirFilter,
    design_rc,
    design_srrc,
    farrow_shift,
    fractional_delay,
    half_sample_branches,
    resample,
)
from .iqio import read_iq, read_sidecar, write_iq
from .modem import CssSymbol, IqBuffer, ModemConfig, SampleRate
from .sim import (
    BerPoint,
    ExperimentSpec,
    MseCurve,
    SimResult,
    emit_results,
    parse_csv,
    run_experiment,
)
from .sync import (
    BinSpectrum,
    CoarseSync,
    PhaseLoop,
    TimingEstimate,
    TimingLoop,
    accumulate_preamble,
    build_preamble,
    coarse_estimate,
    dtd,
    phase_detect,
    sigma_phi_sq,
    smod,
)
from .txrx import (
    Burst,
    BurstReport,
    count_errors,
    random_burst,
    receive_coherent,
    receive_ideal,
    receive_noncoherent,
    transmit,
)

__version__ = "0.1.0"
