"""Plot-ready datasets for the standard figures.

Every builder takes the worker count and returns ``(settings, tables)``:
the resolved settings (echoed into the sidecar) and a list of
``(file_stem, Table)`` pairs. Outputs depend only on the settings.
"""

from __future__ import annotations

import numpy as np

from . import jc_model, spin_model, transfer_matrix
from .core import IMPURITY, PhysicalParams, build_cavity_chain, build_mirror_chain
from .sweep import run_sweep
from .tables import SpectrumTable, Table, TrajectoryTable

MIRROR_PARAMS = {"gamma_1d": 0.25, "gamma_prime": 1.0, "omega_a_over_gamma": 5.4e7}


def fig2a(workers=1):
    """Mirror reflectance for three atom numbers, exact phases."""
    s = {"params": MIRROR_PARAMS, "n_m": [1000, 10000, 100000], "delta": [-6000.0, 6000.0, 2401]}
    p = PhysicalParams.from_dict(s["params"])
    deltas = np.linspace(*s["delta"][:2], s["delta"][2])
    cols = {"delta": deltas}
    for n in s["n_m"]:
        cols[f"R_{n}"] = transfer_matrix.chain_spectrum(build_mirror_chain(n), p, deltas, "exact")["R"]
    return s, [("fig2a", SpectrumTable(cols, meta={"gamma_total": p.gamma_total}))]


def _log_ints(lo_exp, hi_exp, num, even=False):
    vals = np.unique(np.round(np.logspace(lo_exp, hi_exp, num)).astype(int))
    if even:
        vals = np.unique(2 * np.round(vals / 2).astype(int))
    return vals.tolist()


def fig2b(workers=1):
    """Finesse against mirror atom number at several detunings."""
    s = {"params": MIRROR_PARAMS, "n_m": _log_ints(1, 6, 26), "delta": [0, 30, 100, 300, 1000]}
    table = run_sweep("finesse", {"delta": s["delta"], "n_m": s["n_m"]}, s["params"], {"phase_mode": "exact"}, workers)
    return s, [("fig2b", table)]


def fig2c(workers=1):
    """Field intensity along a cavity whose impurity is driven on resonance."""
    s = {"params": MIRROR_PARAMS, "n_m_per_side": 100, "samples_per_spacing": 8}
    p = PhysicalParams.from_dict(s["params"])
    geom = build_cavity_chain(s["n_m_per_side"])
    gen = spin_model.build_generator(geom, p)
    c = spin_model.steady_state_weak_drive(gen, 0.0, spin_model.impurity_drive(gen))
    z = gen.positions
    k = s["samples_per_spacing"]
    # samples strictly between neighbouring atoms
    frac = (np.arange(k) + 0.5) / k
    zs = np.concatenate([z[i] + frac * (z[i + 1] - z[i]) for i in range(z.size - 1)])
    er, el = spin_model.reconstruct_fields(gen, c, zs)
    d_m = z[-1] - z[-2]
    profile = Table({"z_sites": zs / d_m, "intensity": np.abs(er + el) ** 2})
    local = np.abs(spin_model.local_fields(gen, c)) ** 2
    roles = [geom.roles[i] for i in gen.sites]
    sites = Table({
        "z_sites": z / d_m,
        "is_impurity": np.array([r == IMPURITY for r in roles]),
        "local_intensity": local,
    })
    return s, [("fig2c_profile", profile), ("fig2c_sites", sites)]


def fig3ab(workers=1, which="both"):
    s = {"params": MIRROR_PARAMS, "n_a": 3000, "delta": [-40.0, 40.0, 2001], "phase_mode": "exact"}
    p = PhysicalParams.from_dict(s["params"])
    deltas = np.linspace(*s["delta"][:2], s["delta"][2])
    spec = transfer_matrix.driven_impurity_spectrum_analytic(build_cavity_chain(s["n_a"] // 2), p, deltas, "exact")
    meta = {"gamma_total": p.gamma_total}
    out = []
    if which in ("both", "a"):
        out.append(("fig3a", SpectrumTable({"delta": deltas, "Ic": spec["Ic"]}, meta)))
    if which in ("both", "b"):
        out.append(("fig3b", SpectrumTable({"delta": deltas, "Tc": spec["Tc"]}, meta)))
    return s, out


def fig3a(workers=1):
    """Intra-cavity intensity spectrum of the driven impurity."""
    return fig3ab(workers, "a")


def fig3b(workers=1):
    """Intensity transmitted through one mirror, same drive."""
    return fig3ab(workers, "b")


def fig3c(workers=1):
    """Normal-mode peak positions against mirror atom number."""
    s = {
        "params": MIRROR_PARAMS,
        "gamma_1d": [0.25, 2.0 / 3.0],
        "NA": _log_ints(2, 6, 17, even=True),
        "phase_mode": "exact",
        "num": 20001,
    }
    axes = {"gamma_1d": s["gamma_1d"], "NA": s["NA"]}
    options = {"backend": "transfer_matrix", "phase_mode": s["phase_mode"], "num": s["num"]}
    return s, [("fig3c", run_sweep("splitting", axes, s["params"], options, workers))]


def fig3d(workers=1):
    """Intra-cavity spectra with the impurity detuned from the mirror atoms."""
    s = {
        "params": MIRROR_PARAMS,
        "n_a": 3000,
        "delta_ai": [-30.0, -15.0, 0.0, 15.0, 30.0],
        "delta_i": [-40.0, 40.0, 1601],
    }
    p = PhysicalParams.from_dict(s["params"])
    base = build_cavity_chain(s["n_a"] // 2)
    i0 = int(base.indices(IMPURITY)[0])
    delta_i = np.linspace(*s["delta_i"][:2], s["delta_i"][2])
    rows = {"delta_ai": [], "delta_i": [], "Ic": []}
    for dai in s["delta_ai"]:
        offsets = np.zeros(len(base))
        # impurity resonance sits delta_ai below the mirror resonance
        offsets[i0] = -p.to_rate(dai)
        geom = base.with_offsets(offsets)
        spec = transfer_matrix.driven_impurity_spectrum_analytic(geom, p, delta_i - dai, "exact")
        rows["delta_ai"].append(np.full(delta_i.size, dai))
        rows["delta_i"].append(delta_i)
        rows["Ic"].append(spec["Ic"])
    return s, [("fig3d", Table({k: np.concatenate(v) for k, v in rows.items()}))]


def fig3e(workers=1):
    """Vacuum Rabi oscillations of an excited impurity in the full chain."""
    s = {"params": MIRROR_PARAMS, "n_a": 900, "t": [0.0, 4.0, 401]}
    p = PhysicalParams.from_dict(s["params"])
    gen = spin_model.build_generator(build_cavity_chain(s["n_a"] // 2), p)
    times = np.linspace(*s["t"][:2], s["t"][2]) / p.gamma_total
    traj = spin_model.evolve(gen, spin_model.collective_mode(gen, "impurity").vector, times)
    jc = jc_model.rabi_population_analytic(jc_model.jc_from_physical(s["n_a"], p), times)
    table = TrajectoryTable({
        "t": times,
        "Pe": traj["Pe"],
        "Pcav": traj["Pcav"],
        "norm": traj["norm"],
        "Pe_jc": jc["Pe"],
        "Pe_free": np.exp(-p.gamma_total * times),
    })
    return s, [("fig3e", table)]


def fig4c(workers=1):
    """Optimized transfer fidelity over coupling ratio and atom number."""
    s = {
        "gamma_prime": 1.0,
        "gamma1d_ratio": [0.05, 0.1, 0.25, 0.5, 1.0],
        "NA": [100, 300, 1000, 3000],
        "duration": "50/g",
        "bracket": [0.05, 10.0],
    }
    axes = {"gamma1d_ratio": s["gamma1d_ratio"], "NA": s["NA"]}
    table = run_sweep("transfer", axes, {"gamma_prime": s["gamma_prime"]}, {"bracket": s["bracket"]}, workers)
    return s, [("fig4c", table)]


FIGURES = {
    "fig2a": fig2a,
    "fig2b": fig2b,
    "fig2c": fig2c,
    "fig3a": fig3a,
    "fig3b": fig3b,
    "fig3c": fig3c,
    "fig3d": fig3d,
    "fig3e": fig3e,
    "fig4c": fig4c,
}
