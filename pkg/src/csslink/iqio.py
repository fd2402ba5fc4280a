"""Raw IQ file I/O.

Payload files hold little-endian 32-bit floats, interleaved I,Q per
complex sample, nothing else.  A plain-text sidecar (payload path plus
".meta") carries the four keys needed to interpret them:
sample_rate_hz, sf, bandwidth_hz, oversample.  Buffers round-trip
value-exactly at 32-bit precision.
"""

from __future__ import annotations

import os

import numpy as np

from .modem import IqBuffer, ModemConfig, SampleRate

SIDECAR_SUFFIX = ".meta"
SIDECAR_KEYS = ("sample_rate_hz", "sf", "bandwidth_hz", "oversample")


def sidecar_path(path: str) -> str:
    return path + SIDECAR_SUFFIX


def write_iq(path: str, buf: IqBuffer, cfg: ModemConfig) -> None:
    """Write buf's samples and the sidecar describing them.

    The buffer is expected at the oversampled channel rate, which is
    what transmit produces and the file-based receivers consume.
    """
    samples = np.asarray(buf.samples)
    inter = np.empty(2 * len(samples), dtype="<f4")
    inter[0::2] = samples.real
    inter[1::2] = samples.imag
    try:
        with open(path, "wb") as f:
            inter.tofile(f)
        with open(sidecar_path(path), "w", encoding="ascii") as f:
            f.write(f"sample_rate_hz={repr(cfg.sample_rate_hz)}\n")
            f.write(f"sf={cfg.sf}\n")
            f.write(f"bandwidth_hz={repr(cfg.bandwidth_hz)}\n")
            f.write(f"oversample={cfg.oversample}\n")
    except OSError as e:
        raise OSError(f"cannot write IQ file {path!r}: {e}") from e


def read_sidecar(path: str) -> dict[str, float]:
    """Parse the sidecar for an IQ payload path into a key -> value dict."""
    sc = sidecar_path(path)
    if not os.path.exists(sc):
        raise ValueError(f"missing sidecar {sc!r}")
    meta: dict[str, float] = {}
    with open(sc, encoding="ascii") as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{sc!r} line {ln}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            try:
                meta[key.strip()] = float(val)
            except ValueError as e:
                raise ValueError(f"{sc!r} line {ln}: bad number {val!r}") from e
    missing = [k for k in SIDECAR_KEYS if k not in meta]
    if missing:
        raise ValueError(f"{sc!r} missing keys: {', '.join(missing)}")
    return meta


def read_iq(path: str) -> tuple[IqBuffer, dict[str, float]]:
    """Read payload and sidecar back into an oversampled-rate buffer."""
    meta = read_sidecar(path)
    try:
        raw = np.fromfile(path, dtype="<f4")
    except OSError as e:
        raise OSError(f"cannot read IQ file {path!r}: {e}") from e
    if len(raw) % 2:
        raise ValueError(f"{path!r}: truncated payload, odd float count {len(raw)}")
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    return IqBuffer(samples=samples, rate=SampleRate.OVERSAMPLED_LX), meta
