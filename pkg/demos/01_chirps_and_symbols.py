"""Chirp anatomy: how cyclic shifts and PSK phases carry bits.

Run me directly:  python3 demos/01_chirps_and_symbols.py
"""

import numpy as np

from csslink import ModemConfig
from csslink.chirp import basic_chirp, dechirp, dft_bins, down_chirp, symbol_chirp
from csslink.modem import CssSymbol

cfg = ModemConfig(sf=7)
m = cfg.m_count
print(f"SF={cfg.sf}: {m} chips per symbol, {cfg.sf} bits in the cyclic shift")

# --- the basic chirp sweeps the whole band in one symbol -------------------
x0 = basic_chirp(cfg)
inst_freq = np.diff(np.unwrap(np.angle(x0))) / (2 * np.pi)
print(f"instantaneous frequency sweeps {inst_freq[0]:+.3f} -> {inst_freq[-1]:+.3f} "
      "cycles/sample (one full band per symbol)")
print(f"unit modulus: max |.|-1 = {np.abs(np.abs(x0) - 1).max():.2e}")
print(f"down chirp is the conjugate: {np.allclose(down_chirp(cfg), x0.conj())}")

# --- a data symbol is a cyclic shift; de-chirping exposes it ---------------
sym = CssSymbol(m=37)
bins = dft_bins(dechirp(cfg, symbol_chirp(cfg, sym), "up"))
k = int(np.argmax(np.abs(bins)))
print(f"\nsymbol m=37 de-chirps to bin {k} "
      f"(peak {np.abs(bins[k]):.3f} = sqrt(M) = {np.sqrt(m):.3f})")
print(f"energy outside the peak: {np.sum(np.abs(np.delete(bins, k))**2):.2e}")

# --- shifts are orthogonal, which is why the DFT separates them ------------
a = symbol_chirp(cfg, CssSymbol(5))
b = symbol_chirp(cfg, CssSymbol(6))
print(f"\n<shift 5, shift 6> = {np.vdot(a, b):.2e}  (orthogonal)")
print(f"<shift 5, shift 5> = {np.vdot(a, a).real:.1f}  (= M)")

# --- PSK rides on the starting phase of the chirp --------------------------
cfg4 = ModemConfig(sf=7, psk_order=4)
for p in range(4):
    s = symbol_chirp(cfg4, CssSymbol(m=20, p=p))
    peak = dft_bins(dechirp(cfg4, s, "up"))[20]
    print(f"m=20, p={p}: peak phase {np.angle(peak):+.3f} rad "
          f"(steps of 2*pi/4 = {np.pi/2:.3f})")

print("\nThe magnitude spectrum is blind to p: PSK needs the coherent receiver.")
