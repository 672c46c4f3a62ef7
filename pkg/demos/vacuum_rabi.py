"""An impurity atom between two atomic mirrors: vacuum Rabi physics.

Run: python3 demos/vacuum_rabi.py

The impurity couples only to the sub-radiant cavity spin wave of the mirror
atoms, which decays at Gamma' alone. With 900 mirror atoms the coupling g is
three times the impurity linewidth, so the excitation swaps back and forth
between impurity and mirrors before it leaks out.
"""

import numpy as np

from wgqed import PhysicalParams, build_cavity_chain
from wgqed import jc_model, spin_model
from wgqed.transfer_matrix import driven_impurity_spectrum_analytic

params = PhysicalParams(gamma_1d=0.25, gamma_prime=1.0)
n_a = 900
jc = jc_model.jc_from_physical(n_a, params)
print(f"g = {jc.g / params.gamma_total:.2f} Gamma, kappa = {jc.kappa / params.gamma_total:.2f} Gamma, "
      f"C = {jc.cooperativity:.1f}, strong coupling: {jc.strong_coupling}")

gen = spin_model.build_generator(build_cavity_chain(n_a // 2), params)
for kind in ("impurity", "cavity", "radiant"):
    mode = spin_model.collective_mode(gen, kind)
    print(f"  decay rate of the {kind:<8} state: {spin_model.mode_decay_rate(gen, mode):8.3f} Gamma'")

times = np.linspace(0, 2.0, 11) / params.gamma_total
full = spin_model.evolve(gen, spin_model.collective_mode(gen, "impurity").vector, times)
analytic = jc_model.rabi_population_analytic(jc, times)
print("\n  t*Gamma   Pe (901 atoms)   Pe (two-mode)   free decay")
for t, a, b in zip(times, full["Pe"], analytic["Pe"]):
    print(f"  {t * params.gamma_total:7.2f}   {a:14.6f}   {b:13.6f}   {np.exp(-params.gamma_total * t):10.6f}")

# Driving the impurity weakly reveals the two dressed states.
deltas = np.linspace(-20, 20, 8001)
spec = driven_impurity_spectrum_analytic(build_cavity_chain(n_a // 2), params, deltas)
split = jc_model.peak_splitting(spec)
print(f"\nnormal-mode splitting {split:.3f} Gamma' vs 2g = {2 * jc.g:.3f} Gamma'")
