"""Monte Carlo experiment engine and result emission.

An ExperimentSpec names one experiment kind, a modem config, an Eb/N0
grid and a trial budget; run_experiment executes it burst by burst with
per-trial channel draws (tau, eps uniform on [-0.5, 0.5], psi uniform on
[0, 2pi)) and returns a SimResult that emit_results writes as CSV or
JSON.

Determinism: trial t of grid point i always uses the RNG stream seeded
by (master_seed, i, t), so results are reproducible regardless of how
trials would be distributed over workers.  The BER stopping rule (quit a
point once error_budget bit errors accumulate) is evaluated in trial
order, which pins down the burst count too.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, apply_channel, ebn0_to_snr_db
from .modem import ModemConfig
from .txrx import (
    Burst,
    BurstReport,
    random_burst,
    receive_coherent,
    receive_ideal,
    receive_noncoherent,
    transmit,
)

MSE_KINDS = ("timing_mse", "freq_mse", "phase_mse")
BER_KINDS = ("ber_noncoherent", "ber_coherent", "ber_pskcss", "ber_naive", "ber_ideal")
EXPERIMENT_KINDS = MSE_KINDS + BER_KINDS

@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: what to run, where, and with how many bursts.

    kind selects the receiver and the aggregated quantity:

    * timing_mse / freq_mse / phase_mse: tracking receiver with traces;
      per-symbol-index mean squared error of the timing estimate, of the
      frequency the phase corrector applies, and of the detector phase
      error respectively.
    * ber_noncoherent / ber_coherent / ber_pskcss / ber_naive /
      ber_ideal: bit error rate per grid point.  ber_naive is the
      non-coherent receiver with corrections disabled; ber_ideal uses
      the genie receiver in ideal_mode.

    trials is the burst count per grid point.  BER points additionally
    stop early once error_budget bit errors accumulate, so deep-BER
    points do not burn the full budget.

    MSE kinds drop only bursts the receiver itself flags as failed
    acquisitions (sync_ok False); the excluded count is reported per
    point.  Bursts with wrong symbol decisions stay in on purpose: the
    oversized detector errors they feed the loops are what creates the
    error floors at low SNR, and filtering them out would measure a
    survivor population instead of the receiver.
    """

    kind: str
    cfg: ModemConfig
    ebn0_grid_db: tuple[float, ...]
    trials: int
    master_seed: int = 0
    output_path: str | None = None
    ideal_mode: str = "noncoherent"
    noiseless: bool = False
    error_budget: int = 200

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.ebn0_grid_db:
            raise ValueError("ebn0_grid_db must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.error_budget < 1:
            raise ValueError("error_budget must be >= 1")
        if self.ideal_mode not in ("noncoherent", "coherent"):
            raise ValueError(f"ideal_mode must be noncoherent or coherent, got {self.ideal_mode!r}")
        if self.kind == "ber_pskcss" and self.cfg.psk_order < 2:
            raise ValueError("ber_pskcss needs cfg.psk_order >= 2")
        object.__setattr__(self, "ebn0_grid_db", tuple(float(e) for e in self.ebn0_grid_db))


@dataclass(frozen=True)
class BerPoint:
    """Error counts of one BER grid point."""

    ebn0_db: float
    snr_db: float
    bursts: int
    bits: int
    bit_errors: int
    ber: float


@dataclass(frozen=True)
class MseCurve:
    """Per-symbol-index mean squared error at one grid point.

    mse_ui2[s-1] is the average squared error at payload symbol s
    (1-based, matching the loop's update counter) in UI^2 for timing and
    frequency, cycles^2 for phase.
    """

    ebn0_db: float
    bursts: int
    excluded: int
    mse_ui2: np.ndarray


@dataclass
class SimResult:
    """Everything run_experiment produced, ready for emission."""

    kind: str
    cfg: ModemConfig
    master_seed: int
    ber_points: list[BerPoint] = field(default_factory=list)
    mse_curves: list[MseCurve] = field(default_factory=list)
    wall_time_s: float = 0.0

    def header(self) -> list[str]:
        if self.kind in BER_KINDS:
            return ["ebn0_db", "snr_db", "bursts", "bits", "bit_errors", "ber"]
        return ["ebn0_db", "symbol_index", "mse_ui2", "mse_db"]

    def rows(self) -> list[tuple]:
        """Canonical row tuples matching header(), one per CSV line."""
        if self.kind in BER_KINDS:
            return [
                (float(p.ebn0_db), float(p.snr_db), p.bursts, p.bits, p.bit_errors, float(p.ber))
                for p in self.ber_points
            ]
        out = []
        for c in self.mse_curves:
            for s, m in enumerate(c.mse_ui2, start=1):
                mse = float(m)
                out.append(
                    (float(c.ebn0_db), s, mse, 10.0 * float(np.log10(mse)) if mse > 0 else float("-inf"))
                )
        return out


def _decode(
    spec: ExperimentSpec,
    rx,
    params: ChannelParams,
    snr_db: float | None,
    burst: Burst,
    traces: bool = False,
) -> BurstReport:
    cfg = spec.cfg
    if spec.kind == "ber_ideal":
        return receive_ideal(cfg, rx, params, mode=spec.ideal_mode, ref=burst)
    if spec.kind == "ber_naive":
        return receive_noncoherent(cfg, rx, ref=burst, corrections=False)
    if spec.kind == "ber_noncoherent":
        return receive_noncoherent(cfg, rx, ref=burst)
    # ber_coherent, ber_pskcss and every MSE kind ride the tracking receiver.
    return receive_coherent(cfg, rx, ref=burst, snr_db=snr_db, record_traces=traces)


def _run_trial(
    spec: ExperimentSpec, point_idx: int, trial_idx: int, snr_db: float | None, traces: bool
) -> tuple[BurstReport, ChannelParams, Burst]:
    rng = np.random.default_rng((spec.master_seed, point_idx, trial_idx))
    params = ChannelParams(
        tau_ui=rng.uniform(-0.5, 0.5),
        eps_ui=rng.uniform(-0.5, 0.5),
        psi_rad=rng.uniform(0.0, 2.0 * np.pi),
        snr_db=snr_db,
    )
    burst = random_burst(spec.cfg, rng)
    iq = transmit(spec.cfg, burst)
    rx = apply_channel(iq, spec.cfg, params, rng)
    report = _decode(spec, rx, params, snr_db, burst, traces)
    return report, params, burst


def _ber_point(spec: ExperimentSpec, point_idx: int, ebn0_db: float) -> BerPoint:
    cfg = spec.cfg
    snr_db = None if spec.noiseless else ebn0_to_snr_db(cfg, ebn0_db)
    bits = errors = bursts = 0
    for t in range(spec.trials):
        report, _, _ = _run_trial(spec, point_idx, t, snr_db, traces=False)
        bits += cfg.bits_per_burst
        errors += report.bit_errors
        bursts += 1
        if errors >= spec.error_budget:
            break
    return BerPoint(
        ebn0_db=ebn0_db,
        snr_db=snr_db if snr_db is not None else float("inf"),
        bursts=bursts,
        bits=bits,
        bit_errors=errors,
        ber=errors / bits,
    )


def _mse_point(spec: ExperimentSpec, point_idx: int, ebn0_db: float) -> MseCurve:
    cfg = spec.cfg
    snr_db = None if spec.noiseless else ebn0_to_snr_db(cfg, ebn0_db)
    acc = np.zeros(cfg.data_symbols)
    used = excluded = 0
    for t in range(spec.trials):
        report, params, _ = _run_trial(spec, point_idx, t, snr_db, traces=True)
        if not report.sync_ok:
            excluded += 1
            continue
        tr = report.traces
        if spec.kind == "timing_mse":
            err = tr["tau_hat"] - params.tau_ui
        elif spec.kind == "freq_mse":
            err = tr["nco_freq"] - params.eps_ui
        else:
            err = tr["e_phi"]
        acc += err * err
        used += 1
    if used == 0:
        raise RuntimeError(f"all {spec.trials} bursts failed acquisition at Eb/N0 {ebn0_db} dB")
    return MseCurve(ebn0_db=ebn0_db, bursts=used, excluded=excluded, mse_ui2=acc / used)


def run_experiment(spec: ExperimentSpec) -> SimResult:
    """Execute every grid point of one experiment sequentially."""
    t0 = time.perf_counter()
    res = SimResult(kind=spec.kind, cfg=spec.cfg, master_seed=spec.master_seed)
    for i, ebn0 in enumerate(spec.ebn0_grid_db):
        if spec.kind in BER_KINDS:
            res.ber_points.append(_ber_point(spec, i, ebn0))
        else:
            res.mse_curves.append(_mse_point(spec, i, ebn0))
    res.wall_time_s = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# emission


def _meta(res: SimResult) -> dict:
    return {
        "kind": res.kind,
        "cfg": dataclasses.asdict(res.cfg),
        "master_seed": res.master_seed,
        "wall_time_s": res.wall_time_s,
        "mse_excluded": [c.excluded for c in res.mse_curves] or None,
    }


def emit_results(res: SimResult, path: str, fmt: str = "csv") -> None:
    """Write a SimResult to path as CSV or JSON.

    CSV holds one row per grid point (BER) or per (grid point, symbol
    index) pair (MSE); floats use repr so a re-parse recovers them
    exactly.  JSON mirrors the same rows plus a metadata object.
    """
    if fmt == "csv":
        lines = [",".join(res.header())]
        for row in res.rows():
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
        text = "\n".join(lines) + "\n"
        try:
            with open(path, "w", encoding="ascii") as f:
                f.write(text)
        except OSError as e:
            raise OSError(f"cannot write results to {path!r}: {e}") from e
        return
    if fmt != "json":
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    payload = {
        "metadata": _meta(res),
        "columns": res.header(),
        "rows": [list(r) for r in res.rows()],
    }
    try:
        with open(path, "w", encoding="ascii") as f:
            json.dump(payload, f, indent=1)
    except OSError as e:
        raise OSError(f"cannot write results to {path!r}: {e}") from e


def parse_csv(path: str) -> tuple[list[str], list[tuple]]:
    """Read back an emitted CSV; numeric fields regain their exact values."""
    with open(path, encoding="ascii") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        vals = []
        for cell in ln.split(","):
            try:
                vals.append(int(cell))
            except ValueError:
                vals.append(float(cell))
        rows.append(tuple(vals))
    return header, rows
