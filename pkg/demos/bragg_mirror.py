"""A chain of atoms on a half-wavelength lattice acts as a mirror.

Run: python3 demos/bragg_mirror.py

Reflectance on resonance grows with the optical depth N_M * G1D / Gamma'
and saturates once the chain is long enough to open a band gap. Two such
mirrors around an empty site form a cavity whose finesse we print too.
"""

import numpy as np

from wgqed import PhysicalParams, build_mirror_chain
from wgqed.transfer_matrix import band_gap_halfwidth, chain_spectrum, finesse, lorentzian_mirror

params = PhysicalParams(gamma_1d=0.25, gamma_prime=1.0)
print(f"N_gap = {params.n_gap:.4g} atoms, band-gap half-width = {band_gap_halfwidth(params):.1f} Gamma'\n")

print(f"{'N_M':>8} {'R(0)':>10} {'Lorentzian':>11} {'1-R':>10} {'finesse':>9}")
for n in (10, 100, 1000, 10_000, 100_000):
    geom = build_mirror_chain(n)
    R = chain_spectrum(geom, params, [0.0], "exact")["R"][0]
    R_lor, _ = lorentzian_mirror(n, params)
    print(f"{n:>8} {R:>10.6f} {R_lor:>11.6f} {1 - R:>10.2e} {finesse(geom, params):>9.1f}")

# Far below N_gap the line is Lorentzian with width (Gamma' + N G1D); deep in
# the gap it widens to the band edge instead.
deltas = np.linspace(-6000, 6000, 13)
for n in (1000, 100_000):
    R = chain_spectrum(build_mirror_chain(n), params, deltas, "exact")["R"]
    print(f"\nR(delta) for N_M = {n}:")
    for d, r in zip(deltas, R):
        print(f"  delta = {d:>7.0f}   R = {r:.4f}")
