import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wgqed.core import (
    IMPURITY,
    MIRROR,
    TRANSPARENT,
    ChainGeometry,
    PhysicalParams,
    build_cavity_chain,
    build_mirror_chain,
)
from wgqed.errors import InvalidArgumentError, LinearSolveError, UnsupportedGeometryError
from wgqed import jc_model, spin_model as sm
from wgqed.transfer_matrix import chain_spectrum, driven_impurity_spectrum_analytic

P = PhysicalParams(gamma_1d=0.25, gamma_prime=1.0)


def test_single_atom_generator():
    gen = sm.build_generator(ChainGeometry([0.0], [MIRROR]), P)
    assert gen.matrix.shape == (1, 1)
    assert gen.matrix[0, 0] == pytest.approx(-0.625, abs=1e-15)


def test_two_atoms_half_wavelength_apart():
    gen = sm.build_generator(ChainGeometry([0.0, 0.5], [MIRROR] * 2), P)
    assert np.max(np.abs(gen.h_dd)) < 1e-15
    rates = np.sort(-np.linalg.eigvals(gen.matrix).real)
    np.testing.assert_allclose(rates, [0.5, 0.75], atol=1e-15)


def test_two_atoms_quarter_wavelength_apart():
    gen = sm.build_generator(ChainGeometry([0.0, 0.25], [MIRROR] * 2), P)
    assert gen.matrix[0, 1] == pytest.approx(-0.125j, abs=1e-15)
    assert gen.d_mat[0, 1] == pytest.approx(0.0, abs=1e-15)


def test_transparent_sites_are_dropped():
    g = ChainGeometry([0.0, 0.5, 1.0], [MIRROR, TRANSPARENT, MIRROR])
    gen = sm.build_generator(g, P)
    assert gen.n == 2
    np.testing.assert_array_equal(gen.positions, [0.0, 1.0])


def test_detuned_sites_shift_diagonal():
    g = ChainGeometry([0.0], [IMPURITY], detuning_offsets=[2.0])
    gen = sm.build_generator(g, P)
    assert gen.matrix[0, 0] == pytest.approx(-0.625 - 2.0j)


@given(
    st.lists(st.floats(0, 20, allow_subnormal=False), min_size=1, max_size=12, unique=True),
    st.floats(0.01, 2.0),
)
def test_generator_structure(zs, g1):
    zs = sorted(zs)
    gen = sm.build_generator(ChainGeometry(zs, [MIRROR] * len(zs)), PhysicalParams(g1, 1.0))
    np.testing.assert_allclose(gen.h_dd, gen.h_dd.T, atol=1e-15)
    np.testing.assert_allclose(gen.d_mat, gen.d_mat.T, atol=1e-15)
    ev = np.linalg.eigvalsh(gen.d_mat)
    assert ev.min() > -1e-12
    assert np.sum(ev > 1e-9 * g1) <= 2
    # decay of any state is at least the free-space rate
    herm = -(gen.matrix + gen.matrix.conj().T)
    assert np.linalg.eigvalsh(herm).min() >= 1.0 - 1e-12


@given(st.integers(0, 2**31 - 1))
def test_norm_never_grows(seed):
    rng = np.random.default_rng(seed)
    gen = sm.build_generator(build_cavity_chain(5), P)
    psi = rng.normal(size=gen.n) + 1j * rng.normal(size=gen.n)
    psi /= np.linalg.norm(psi)
    norm = sm.evolve(gen, psi, np.linspace(0, 5, 51))["norm"]
    assert norm[0] == pytest.approx(1.0)
    assert np.all(np.diff(norm) <= 1e-14)


def test_evolve_requires_normalized_state():
    gen = sm.build_generator(build_cavity_chain(2), P)
    with pytest.raises(InvalidArgumentError):
        sm.evolve(gen, np.ones(gen.n), [0.0, 1.0])


def test_single_atom_decays_at_total_rate():
    gen = sm.build_generator(ChainGeometry([0.0], [IMPURITY]), P)
    t = np.linspace(0, 4, 9)
    np.testing.assert_allclose(sm.evolve(gen, [1.0], t)["Pe"], np.exp(-1.25 * t), rtol=1e-13)


def test_cavity_photon_decays_at_free_space_rate_without_impurity():
    g = build_cavity_chain(50)
    roles = [TRANSPARENT if r == IMPURITY else r for r in g.roles]
    gen = sm.build_generator(g.with_roles(roles), P)
    t = np.linspace(0, 3, 7)
    traj = sm.evolve(gen, sm.collective_mode(gen, "cavity").vector, t)
    np.testing.assert_allclose(traj["Pcav"], np.exp(-t), rtol=1e-10)
    assert np.all(np.isnan(traj["Pe"]))


def test_vacuum_rabi_follows_jc_at_n100():
    gen = sm.build_generator(build_cavity_chain(50), P)
    t = np.linspace(0, 6, 61)
    traj = sm.evolve(gen, sm.collective_mode(gen, "impurity").vector, t)
    jc = jc_model.rabi_population_analytic(jc_model.jc_from_physical(100, P), t)
    np.testing.assert_allclose(traj["Pe"], jc["Pe"], atol=1e-12)
    np.testing.assert_allclose(traj["Pcav"], jc["Pcav"], atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_emission_branching_sums_to_one(seed):
    rng = np.random.default_rng(seed)
    gen = sm.build_generator(build_mirror_chain(6), P)
    psi = rng.normal(size=gen.n) + 1j * rng.normal(size=gen.n)
    wg, fs = sm.emission_branching(gen, psi / np.linalg.norm(psi))
    assert wg + fs == pytest.approx(1.0, abs=1e-12)
    assert wg >= -1e-14 and fs >= 0


def test_weak_drive_single_atom_resonance():
    gen = sm.build_generator(ChainGeometry([0.0], [IMPURITY]), P)
    c = sm.steady_state_weak_drive(gen, 0.0, [1.0])
    assert abs(c[0]) == pytest.approx(2 / 1.25, rel=1e-14)


def test_weak_drive_singular_system_raises():
    lossless = PhysicalParams(gamma_1d=1.0, gamma_prime=0.0)
    gen = sm.build_generator(ChainGeometry([0.0, 0.5], [MIRROR] * 2), lossless)
    with pytest.raises(LinearSolveError):
        sm.steady_state_weak_drive(gen, 0.0, [1.0, 1.0])


def test_steady_state_spectrum_matches_point_solves():
    gen = sm.build_generator(build_cavity_chain(10), P)
    d = np.linspace(-5, 5, 7)
    drive = sm.impurity_drive(gen)
    full = sm.steady_state_spectrum(gen, d, drive)
    for i, x in enumerate(d):
        np.testing.assert_allclose(full[i], sm.steady_state_weak_drive(gen, x, drive), rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("n", [1, 2, 37, 200])
def test_guided_spectrum_matches_transfer_matrices(n):
    g = build_mirror_chain(n)
    d = np.linspace(-30, 30, 61)
    spin = sm.guided_spectrum(sm.build_generator(g, P), d)
    tm = chain_spectrum(g, P, d, "approx")
    np.testing.assert_allclose(spin["R"], tm["R"], atol=1e-12)
    np.testing.assert_allclose(spin["T"], tm["T"], atol=1e-12)


@pytest.mark.parametrize("n_side", [1, 25, 200])
def test_driven_impurity_spectrum_matches_analytic(n_side):
    g = build_cavity_chain(n_side)
    d = np.linspace(-20, 20, 81)
    spin = sm.driven_impurity_spectrum(sm.build_generator(g, P), d)
    tm = driven_impurity_spectrum_analytic(g, P, d, "approx")
    for col in ("Ic", "Tc", "R", "T"):
        np.testing.assert_allclose(spin[col], tm[col], rtol=1e-9, atol=1e-13)


def test_isolated_driven_atom_emits_unit_intensity():
    gen = sm.build_generator(ChainGeometry([0.0], [IMPURITY]), P)
    s = sm.driven_impurity_spectrum(gen, [0.0, 2.0], with_guided=False)
    np.testing.assert_allclose(s["Ic"], [1.0, 0.2], rtol=1e-13)


def test_local_intensity_of_probed_mirror():
    # guided probe on resonance: every atom sees (Gamma' / (Gamma' + N G1D))^2
    gen = sm.build_generator(build_mirror_chain(100), P)
    drive = sm.guided_drive(gen)
    c = sm.steady_state_weak_drive(gen, 0.0, drive)
    e_in = (1.0, 0.0)
    local = np.abs(sm.local_fields(gen, c, e_in=e_in)) ** 2
    np.testing.assert_allclose(local, (1 / 26) ** 2, rtol=1e-9)


def test_single_atom_local_field_is_mean_of_limits():
    gen = sm.build_generator(ChainGeometry([0.0], [MIRROR]), P)
    c = sm.steady_state_weak_drive(gen, 0.0, sm.guided_drive(gen))
    e = sm.local_fields(gen, c, e_in=(1.0, 0.0))
    # left limit 1 + r1, right limit t1 = 1 + r1, so |t1|^2 with t1 = 0.8
    assert abs(e[0]) ** 2 == pytest.approx(0.64, rel=1e-13)


def test_mirror_sites_in_driven_cavity_see_uniform_intensity():
    gen = sm.build_generator(build_cavity_chain(100), P)
    c = sm.steady_state_weak_drive(gen, 0.0, sm.impurity_drive(gen))
    local = np.abs(sm.local_fields(gen, c)) ** 2
    mirrors = local[gen.mirror_sites]
    # frozen: I_c(0) (Gamma' / (Gamma' + N_M G1D))^2 with N_M = 100 per side
    np.testing.assert_allclose(mirrors, 1 / 121, rtol=1e-8)
    ic0 = driven_impurity_spectrum_analytic(build_cavity_chain(100), P, [0.0], "approx")["Ic"][0]
    assert mirrors[0] == pytest.approx(ic0 / 26**2, rel=1e-8)


def test_fields_vanish_outside_with_no_emission():
    gen = sm.build_generator(build_mirror_chain(3), P)
    er, el = sm.reconstruct_fields(gen, np.zeros(gen.n), np.array([-1.0, 0.25, 5.0]))
    assert not np.any(er) and not np.any(el)


def test_collective_modes_of_cavity():
    gen = sm.build_generator(build_cavity_chain(50), P)
    cav = sm.collective_mode(gen, "cavity")
    rad = sm.collective_mode(gen, "radiant")
    imp = sm.collective_mode(gen, "impurity")
    assert np.linalg.norm(cav.vector) == pytest.approx(1.0)
    assert abs(cav.overlap(rad)) < 1e-15
    assert abs(cav.overlap(imp)) == 0
    assert sm.mode_decay_rate(gen, cav) == pytest.approx(1.0, abs=1e-12)
    assert sm.waveguide_decay_rate(gen, cav) == pytest.approx(0.0, abs=1e-12)
    assert sm.mode_decay_rate(gen, rad) == pytest.approx(26.0, rel=1e-12)
    assert sm.mode_decay_rate(gen, imp) == pytest.approx(1.25, rel=1e-14)


def test_projection_gives_jc_coupling():
    gen = sm.build_generator(build_cavity_chain(50), P)
    basis = [sm.collective_mode(gen, "impurity"), sm.collective_mode(gen, "cavity")]
    h = sm.project(gen, basis)
    assert abs(h[0, 1]) == pytest.approx(1.25, rel=1e-12)
    assert sm.impurity_coupling(gen, int(gen.impurity_sites[0])) == pytest.approx(1.25, rel=1e-12)
    assert h[1, 1].real == pytest.approx(-0.5, abs=1e-12)


def test_modes_need_a_cavity():
    gen = sm.build_generator(build_mirror_chain(4), P)
    with pytest.raises(UnsupportedGeometryError):
        sm.collective_mode(gen, "cavity")
    with pytest.raises(UnsupportedGeometryError):
        sm.impurity_drive(gen)
    g = build_cavity_chain(3)
    roles = list(g.roles)
    roles[0] = TRANSPARENT
    with pytest.raises(UnsupportedGeometryError):
        sm.collective_mode(sm.build_generator(g.with_roles(roles), P), "cavity")


def test_unknown_mode_kind():
    gen = sm.build_generator(build_cavity_chain(2), P)
    with pytest.raises(InvalidArgumentError):
        sm.collective_mode(gen, "dark")


def test_retrieval_efficiency_values():
    assert 1 - sm.retrieval_efficiency(900, P) == pytest.approx(1 / 226, rel=1e-14)
    assert sm.retrieval_efficiency(5, PhysicalParams(0.25, 0.0)) == 1.0
    assert sm.retrieval_efficiency(1, P) == pytest.approx(0.2, rel=1e-14)
    with pytest.raises(InvalidArgumentError):
        sm.retrieval_efficiency(0, P)


@pytest.mark.parametrize("n_a", [2, 10, 100])
def test_retrieval_dynamics_match_closed_form(n_a):
    assert sm.retrieval_efficiency_dynamic(n_a, P) == pytest.approx(sm.retrieval_efficiency(n_a, P), rel=1e-10)


def test_retrieval_dynamic_needs_even_count():
    with pytest.raises(InvalidArgumentError):
        sm.retrieval_efficiency_dynamic(9, P)


def _splitting_ratio(geom, params):
    gen = sm.build_generator(geom, params)
    law = params.gamma_1d * math.sqrt(geom.n_mirror)
    half = 1.6 * law / params.gamma_total
    s = sm.driven_impurity_spectrum(gen, np.linspace(-half, half, 4001), with_guided=False)
    return jc_model.peak_splitting(s) / law


def test_splitting_robust_to_random_vacancies():
    params = PhysicalParams(gamma_1d=2 / 3, gamma_prime=1.0)
    base = build_cavity_chain(200)
    ratios = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        fill = rng.uniform(0.5, 1.0)
        roles = [TRANSPARENT if r == MIRROR and rng.random() > fill else r for r in base.roles]
        ratios.append(_splitting_ratio(base.with_roles(roles), params))
    assert np.all(np.abs(np.array(ratios) - 1) < 0.05)
