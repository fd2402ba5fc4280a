"""Command line front end.

Subcommands: sim (run an experiment grid), tx (write a burst IQ file),
rx (decode an IQ file), filters (dump designed filter taps).  Every
option can also come from a plain-text config file of key=value lines
(# comments allowed) named with --config; explicit flags win over the
file, the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .channel import ChannelParams, apply_channel
from .filters import design_rc, design_srrc
from .iqio import read_iq, write_iq
from .modem import ModemConfig
from .sim import EXPERIMENT_KINDS, ExperimentSpec, emit_results, run_experiment
from .txrx import random_burst, receive_coherent, receive_noncoherent, transmit

CONFIG_KEYS = """config file keys (same names as the long flags, without --):
  experiment, ebn0, trials, seed, out, format, ideal_mode, noiseless,
  budget, receiver, sf, oversample, psk_order, rolloff, srrc_order,
  n_down, n_up, n_cp, data_symbols, bandwidth_hz, head"""


def _load_config(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    try:
        with open(path, encoding="ascii") as f:
            for ln, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path!r} line {ln}: expected key=value, got {line!r}")
                key, _, val = line.partition("=")
                cfg[key.strip()] = val.strip()
    except OSError as e:
        raise OSError(f"cannot read config {path!r}: {e}") from e
    return cfg


class _Options:
    """Flag > config-file > default resolution for one parsed command."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = _load_config(args.config) if args.config else {}

    def get(self, name: str, cast, default):
        flag_val = getattr(self.args, name, None)
        if flag_val is not None:
            return flag_val
        if name in self.file:
            raw = self.file[name]
            if cast is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            return cast(raw)
        return default


def _add_modem_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("modem")
    g.add_argument("--sf", type=int, help="spreading factor, M = 2^sf (default 8)")
    g.add_argument("--oversample", type=int, help="channel-rate samples per chip (default 2)")
    g.add_argument("--psk-order", dest="psk_order", type=int, help="PSK alphabet Q, 1 disables (default 1)")
    g.add_argument("--rolloff", type=float, help="raised-cosine rolloff (default 0.25)")
    g.add_argument("--srrc-order", dest="srrc_order", type=int, help="SRRC half-length in chips (default 16)")
    g.add_argument("--n-down", dest="n_down", type=int, help="down chirps in the preamble (default 8)")
    g.add_argument("--n-up", dest="n_up", type=int, help="up chirps in the preamble (default 8)")
    g.add_argument("--n-cp", dest="n_cp", type=int, help="cyclic prefix chips (default M/2)")
    g.add_argument("--data-symbols", dest="data_symbols", type=int, help="payload symbols per burst (default 256)")
    g.add_argument("--bandwidth-hz", dest="bandwidth_hz", type=float, help="chirp bandwidth B (default 125e3)")
    g.add_argument("--head", type=int, help="symbols detected non-coherently first (default 16)")


def _build_cfg(opt: _Options, meta: dict[str, float] | None = None) -> ModemConfig:
    def md(key, cast, fallback):
        return cast(meta[key]) if meta is not None and key in meta else fallback

    kwargs = dict(
        sf=opt.get("sf", int, md("sf", int, 8)),
        oversample=opt.get("oversample", int, md("oversample", int, 2)),
        psk_order=opt.get("psk_order", int, 1),
        rolloff=opt.get("rolloff", float, 0.25),
        srrc_order=opt.get("srrc_order", int, 16),
        n_down=opt.get("n_down", int, 8),
        n_up=opt.get("n_up", int, 8),
        data_symbols=opt.get("data_symbols", int, 256),
        bandwidth_hz=opt.get("bandwidth_hz", float, md("bandwidth_hz", float, 125e3)),
        noncoherent_head=opt.get("head", int, 16),
    )
    n_cp = opt.get("n_cp", int, 0)
    if n_cp:
        kwargs["n_cp"] = n_cp
    return ModemConfig(**kwargs)


def _cmd_sim(args: argparse.Namespace) -> int:
    opt = _Options(args)
    cfg = _build_cfg(opt)
    ebn0 = opt.get("ebn0", str, None)
    if ebn0 is None:
        raise ValueError("sim needs --ebn0 (comma-separated dB list)")
    grid = tuple(float(x) for x in str(ebn0).split(","))
    spec = ExperimentSpec(
        kind=opt.get("experiment", str, "ber_noncoherent"),
        cfg=cfg,
        ebn0_grid_db=grid,
        trials=opt.get("trials", int, 100),
        master_seed=opt.get("seed", int, 0),
        ideal_mode=opt.get("ideal_mode", str, "noncoherent"),
        noiseless=opt.get("noiseless", bool, False),
        error_budget=opt.get("budget", int, 200),
    )
    res = run_experiment(spec)
    for row in res.rows() if spec.kind not in ("timing_mse", "freq_mse", "phase_mse") else []:
        print("  ".join(f"{h}={v}" for h, v in zip(res.header(), row)))
    for curve in res.mse_curves:
        tail = curve.mse_ui2[-len(curve.mse_ui2) // 4 :].mean()
        print(
            f"ebn0_db={curve.ebn0_db}  bursts={curve.bursts}  excluded={curve.excluded}  "
            f"tail_mse={tail:.6e}"
        )
    out = opt.get("out", str, None)
    if out:
        emit_results(res, out, fmt=opt.get("format", str, "csv"))
        print(f"wrote {out}")
    return 0


def _cmd_tx(args: argparse.Namespace) -> int:
    opt = _Options(args)
    cfg = _build_cfg(opt)
    out = opt.get("out", str, None)
    if out is None:
        raise ValueError("tx needs --out (IQ payload path)")
    seed = opt.get("seed", int, 0)
    rng = np.random.default_rng(seed)
    burst = random_burst(cfg, rng)
    iq = transmit(cfg, burst)
    tau = opt.get("tau", float, None)
    eps = opt.get("eps", float, None)
    psi = opt.get("psi", float, None)
    snr = opt.get("snr_db", float, None)
    if any(v is not None for v in (tau, eps, psi, snr)):
        params = ChannelParams(
            tau_ui=tau or 0.0, eps_ui=eps or 0.0, psi_rad=psi or 0.0, snr_db=snr
        )
        iq = apply_channel(iq, cfg, params, rng)
    write_iq(out, iq, cfg)
    print(
        f"wrote {out} ({len(iq.samples)} samples at {cfg.sample_rate_hz:.0f} Hz, "
        f"{cfg.bits_per_burst} payload bits, burst seed {seed})"
    )
    return 0


def _cmd_rx(args: argparse.Namespace) -> int:
    opt = _Options(args)
    path = opt.get("infile", str, None)
    if path is None:
        raise ValueError("rx needs --in (IQ payload path)")
    iq, meta = read_iq(path)
    cfg = _build_cfg(opt, meta)
    receiver = opt.get("receiver", str, "coherent")
    ref = None
    ref_seed = opt.get("ref_seed", int, None)
    if ref_seed is not None:
        ref = random_burst(cfg, np.random.default_rng(ref_seed))
    if receiver == "coherent":
        rep = receive_coherent(cfg, iq, ref=ref, snr_db=opt.get("snr_db", float, None))
    elif receiver == "noncoherent":
        rep = receive_noncoherent(cfg, iq, ref=ref)
    elif receiver == "naive":
        rep = receive_noncoherent(cfg, iq, ref=ref, corrections=False)
    else:
        raise ValueError(f"receiver must be coherent, noncoherent or naive, got {receiver!r}")
    payload = {
        "receiver": receiver,
        "sync_ok": rep.sync_ok,
        "coarse": dataclasses.asdict(rep.coarse) if rep.coarse is not None else None,
        "symbols": [[s.m, s.p] for s in rep.symbols],
        "bit_errors": rep.bit_errors,
        "symbol_errors": rep.symbol_errors,
    }
    print(json.dumps(payload))
    return 0


def _cmd_filters(args: argparse.Namespace) -> int:
    opt = _Options(args)
    kind = opt.get("kind", str, "srrc")
    rolloff = opt.get("rolloff", float, 0.25)
    order = opt.get("srrc_order", int, 16)
    rate = opt.get("oversample", int, 2)
    if kind == "srrc":
        fir = design_srrc(rolloff, order, rate)
    elif kind == "rc":
        fir = design_rc(rolloff, order, rate)
    else:
        raise ValueError(f"kind must be srrc or rc, got {kind!r}")
    lines = ["index,tap"] + [f"{i},{repr(float(t))}" for i, t in enumerate(fir.taps)]
    text = "\n".join(lines) + "\n"
    out = opt.get("out", str, None)
    if out:
        with open(out, "w", encoding="ascii") as f:
            f.write(text)
        print(f"wrote {out} ({len(fir.taps)} taps)")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="csslink",
        description="Chirp spread spectrum link simulator",
        epilog=CONFIG_KEYS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sim", help="run a Monte Carlo experiment", epilog=CONFIG_KEYS,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    ps.add_argument("--config", help="key=value config file")
    ps.add_argument("--experiment", choices=EXPERIMENT_KINDS, help="experiment kind")
    ps.add_argument("--ebn0", help="comma-separated Eb/N0 grid, dB")
    ps.add_argument("--trials", type=int, help="bursts per grid point (default 100)")
    ps.add_argument("--seed", type=int, help="master seed (default 0)")
    ps.add_argument("--out", help="result file path")
    ps.add_argument("--format", choices=("csv", "json"), help="result format (default csv)")
    ps.add_argument("--ideal-mode", dest="ideal_mode", choices=("noncoherent", "coherent"),
                    help="detection mode for ber_ideal")
    ps.add_argument("--noiseless", action="store_const", const=True, help="disable channel noise")
    ps.add_argument("--budget", type=int, help="bit-error stopping budget per point (default 200)")
    _add_modem_args(ps)
    ps.set_defaults(func=_cmd_sim)

    pt = sub.add_parser("tx", help="write one burst as an IQ file")
    pt.add_argument("--config", help="key=value config file")
    pt.add_argument("--out", help="IQ payload path (sidecar adds .meta)")
    pt.add_argument("--seed", type=int, help="burst content seed (default 0)")
    pt.add_argument("--tau", type=float, help="apply timing offset, UI")
    pt.add_argument("--eps", type=float, help="apply frequency offset, UI")
    pt.add_argument("--psi", type=float, help="apply carrier phase, radians")
    pt.add_argument("--snr-db", dest="snr_db", type=float, help="apply noise at this SNR")
    _add_modem_args(pt)
    pt.set_defaults(func=_cmd_tx)

    pr = sub.add_parser("rx", help="decode an IQ file and print a JSON report")
    pr.add_argument("--config", help="key=value config file")
    pr.add_argument("--in", dest="infile", help="IQ payload path")
    pr.add_argument("--receiver", choices=("coherent", "noncoherent", "naive"),
                    help="receiver flavour (default coherent)")
    pr.add_argument("--ref-seed", dest="ref_seed", type=int,
                    help="regenerate the tx burst from this seed and count errors")
    pr.add_argument("--snr-db", dest="snr_db", type=float, help="operating SNR hint for the loops")
    _add_modem_args(pr)
    pr.set_defaults(func=_cmd_rx)

    pf = sub.add_parser("filters", help="dump designed filter taps as CSV")
    pf.add_argument("--config", help="key=value config file")
    pf.add_argument("--kind", choices=("srrc", "rc"), help="filter family (default srrc)")
    pf.add_argument("--out", help="CSV path (default stdout)")
    pf.add_argument("--rolloff", type=float, help="rolloff (default 0.25)")
    pf.add_argument("--srrc-order", dest="srrc_order", type=int, help="half-length in chips (default 16)")
    pf.add_argument("--oversample", type=int, help="samples per chip (default 2)")
    pf.set_defaults(func=_cmd_filters)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as e:
        print(f"csslink: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
