"""Single-excitation spin model of atoms coupled through the waveguide.

The guided mode mediates an infinite-range exchange ``(G1D/2) sin(k_A|z_j - z_k|)``
and a collective decay matrix ``G1D cos(k_A (z_j - z_k))``; each atom also
decays into free space at ``Gamma'``. Restricted to one excitation and without
quantum jumps the amplitudes obey ``dc/dt = G c`` with

    G_jk = -(G1D/2) exp(i k_A |z_j - z_k|) - (Gamma'/2) delta_jk - i offset_j delta_jk.

Guided fields are rebuilt from the amplitudes by superposing the emission of
every atom, ``i sqrt(G1D/2) c_j`` per direction, on top of the input field.
Weak external drives enter as ``dc/dt = (i Delta + G) c + i drive``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .core import IMPURITY, K_A, MIRROR, TRANSPARENT, ChainGeometry, PhysicalParams, build_cavity_chain
from .errors import (
    InvalidArgumentError,
    LinearSolveError,
    NumericalFailureError,
    UnsupportedGeometryError,
)
from .tables import SpectrumTable, TrajectoryTable

log = logging.getLogger(__name__)

EIG_COND_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class Generator:
    """No-jump generator restricted to the non-transparent sites.

    ``sites`` indexes those sites in ``geometry``; every vector handled by this
    module is ordered the same way.
    """

    geometry: ChainGeometry
    params: PhysicalParams
    sites: np.ndarray
    positions: np.ndarray
    h_dd: np.ndarray
    d_mat: np.ndarray
    detunings: np.ndarray

    @property
    def n(self) -> int:
        return self.positions.size

    @property
    def gamma_prime(self) -> float:
        return self.params.gamma_prime

    @cached_property
    def matrix(self) -> np.ndarray:
        g = -1j * self.h_dd - 0.5 * self.d_mat
        g[np.diag_indices_from(g)] -= 0.5 * self.gamma_prime + 1j * self.detunings
        return g

    def local_index(self, geometry_index: int) -> int:
        hit = np.flatnonzero(self.sites == geometry_index)
        if hit.size == 0:
            raise InvalidArgumentError(f"site {geometry_index} is transparent")
        return int(hit[0])

    @cached_property
    def impurity_sites(self) -> np.ndarray:
        roles = self.geometry.roles
        return np.array([i for i, s in enumerate(self.sites) if roles[s] == IMPURITY], dtype=int)

    @cached_property
    def mirror_sites(self) -> np.ndarray:
        roles = self.geometry.roles
        return np.array([i for i, s in enumerate(self.sites) if roles[s] == MIRROR], dtype=int)


@dataclass(frozen=True)
class CollectiveMode:
    vector: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise InvalidArgumentError("mode vector is zero")
        object.__setattr__(self, "vector", v / nrm)

    def overlap(self, other) -> complex:
        other = other.vector if isinstance(other, CollectiveMode) else np.asarray(other)
        return complex(np.vdot(self.vector, other))


def build_generator(geom: ChainGeometry, params: PhysicalParams, detunings=None) -> Generator:
    """Dipole-dipole generator for the active sites of ``geom``.

    ``detunings`` are per-active-site resonance shifts (rates); by default the
    geometry's ``detuning_offset`` values.
    """
    sites = np.flatnonzero(geom.active)
    if sites.size == 0:
        raise InvalidArgumentError("generator needs at least one non-transparent site")
    z = geom.positions[sites]
    if detunings is None:
        det = geom.detuning_offsets[sites].astype(float)
    else:
        det = np.asarray(detunings, dtype=float).reshape(-1)
        if det.size != sites.size:
            raise InvalidArgumentError("need one detuning per non-transparent site")
    dz = z[:, None] - z[None, :]
    g1 = params.gamma_1d
    h = 0.5 * g1 * np.sin(K_A * np.abs(dz))
    d = g1 * np.cos(K_A * dz)
    for a in (z, det, h, d):
        a.flags.writeable = False
    return Generator(geom, params, sites, z, h, d, det)


# -- time evolution ---------------------------------------------------------


def _propagate(G, state0, times):
    """Rows are ``exp(G t) state0`` for each ``t`` in ``times``."""
    w, V = np.linalg.eig(G)
    cond = np.linalg.cond(V)
    if np.isfinite(cond) and cond < EIG_COND_LIMIT:
        a = np.linalg.solve(V, state0)
        return (np.exp(np.outer(times, w)) * a) @ V.T
    log.info("eigenbasis condition %.3g too large; using scaling and squaring", cond)
    out = np.empty((times.size, state0.size), dtype=complex)
    steps = np.diff(times)
    if times.size > 1 and np.allclose(steps, steps[0], rtol=1e-12, atol=0):
        # uniform grid: one propagator per step
        out[0] = sla.expm(G * times[0]) @ state0
        U = sla.expm(G * steps[0])
        for i in range(1, times.size):
            out[i] = U @ out[i - 1]
        return out
    for i, t in enumerate(times):
        out[i] = sla.expm(G * t) @ state0
    return out


def _check_state(gen, state0):
    state0 = np.asarray(state0, dtype=complex).reshape(-1)
    if state0.size != gen.n:
        raise InvalidArgumentError(f"state has {state0.size} entries, generator has {gen.n} sites")
    if not np.all(np.isfinite(state0)):
        raise NumericalFailureError("initial state has non-finite entries")
    if abs(np.linalg.norm(state0) - 1.0) > 1e-9:
        raise InvalidArgumentError("initial state must be normalized")
    return state0


def _mode_or_none(gen, kind):
    try:
        return collective_mode(gen, kind).vector
    except UnsupportedGeometryError:
        return None


def excited_population_index(gen: Generator):
    """Site whose population is reported as ``Pe``: the first impurity, or
    the only atom of a one-atom chain. ``None`` otherwise."""
    if gen.impurity_sites.size:
        return int(gen.impurity_sites[0])
    if gen.n == 1:
        return 0
    return None


def evolve(gen: Generator, state0, times) -> TrajectoryTable:
    """No-jump evolution ``c(t) = exp(G t) c(0)``.

    Uses the eigendecomposition of ``G`` unless its eigenbasis is
    ill-conditioned, in which case ``scipy.linalg.expm`` takes over.
    Columns: ``t, Pe, Pcav, Prad, norm`` with ``nan`` where the geometry does
    not define the quantity.
    """
    state0 = _check_state(gen, state0)
    times = np.asarray(times, dtype=float).reshape(-1)
    amps = _propagate(gen.matrix, state0, times)
    if not np.all(np.isfinite(amps)):
        raise NumericalFailureError("non-finite amplitudes during evolution")
    ie = excited_population_index(gen)
    nan = np.full(times.size, np.nan)
    pe = np.abs(amps[:, ie]) ** 2 if ie is not None else nan
    cols = {"t": times, "Pe": pe}
    for name, kind in (("Pcav", "cavity"), ("Prad", "radiant")):
        v = _mode_or_none(gen, kind)
        cols[name] = np.abs(amps @ v.conj()) ** 2 if v is not None else nan
    cols["norm"] = np.sum(np.abs(amps) ** 2, axis=1)
    return TrajectoryTable(cols, meta={"backend": "spin_model"}, amplitudes=amps)


def emission_branching(gen: Generator, state0) -> tuple[float, float]:
    """Total probability emitted into the waveguide and into free space.

    Integrates ``c(t)^H D c(t)`` and ``Gamma' |c(t)|^2`` over ``0 <= t < inf``
    mode by mode: with ``c(t) = V exp(w t) a`` each term integrates to
    ``-conj(a_m) a_n W_mn / (conj(w_m) + w_n)``.
    """
    state0 = _check_state(gen, state0)
    w, V = np.linalg.eig(gen.matrix)
    a = np.linalg.solve(V, state0)
    rates = -1.0 / (w.conj()[:, None] + w[None, :])
    weights = np.outer(a.conj(), a) * rates
    wg = np.sum(weights * (V.conj().T @ gen.d_mat @ V))
    fs = gen.gamma_prime * np.sum(weights * (V.conj().T @ V))
    return float(wg.real), float(fs.real)


# -- weak-drive steady states and fields ------------------------------------


def _wavevector(gen, omega_p):
    return K_A if omega_p is None else K_A * omega_p / gen.params.omega_a


def emission_coefficient(params: PhysicalParams) -> complex:
    """Guided field radiated per unit amplitude into each direction."""
    return 1j * np.sqrt(params.gamma_1d / 2.0)


def guided_drive(gen: Generator, amplitude_right=1.0, amplitude_left=0.0, omega_p=None) -> np.ndarray:
    """Drive vector produced by guided input fields ``a_R e^{ikz} + a_L e^{-ikz}``."""
    k = _wavevector(gen, omega_p)
    field = amplitude_right * np.exp(1j * k * gen.positions) + amplitude_left * np.exp(-1j * k * gen.positions)
    return np.sqrt(gen.params.gamma_1d / 2.0) * field


def impurity_drive(gen: Generator, amplitude=1.0) -> np.ndarray:
    """Free-space drive on the impurity.

    Scaled so that an isolated atom driven on resonance with ``amplitude = 1``
    radiates unit guided intensity into each direction.
    """
    if gen.impurity_sites.size != 1:
        raise UnsupportedGeometryError("impurity drive needs exactly one impurity")
    p = gen.params
    if p.gamma_1d == 0:
        raise InvalidArgumentError("no guided emission with gamma_1d = 0")
    d = np.zeros(gen.n, dtype=complex)
    d[gen.impurity_sites[0]] = amplitude * p.gamma_total / np.sqrt(2.0 * p.gamma_1d)
    return d


def steady_state_weak_drive(gen: Generator, delta: float, drive) -> np.ndarray:
    """Stationary amplitudes solving ``(i Delta + G) c = -i drive``.

    ``delta`` is dimensionless; ``Delta = delta * Gamma / 2``.
    """
    drive = np.asarray(drive, dtype=complex).reshape(-1)
    if drive.size != gen.n:
        raise InvalidArgumentError("need one drive amplitude per non-transparent site")
    if not np.any(drive):
        raise InvalidArgumentError("drive is zero everywhere")
    A = gen.matrix + 1j * gen.params.to_rate(delta) * np.eye(gen.n)
    try:
        # rcond below machine precision means delta sits on a lossless pole
        with np.errstate(all="raise"), warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            c = sla.solve(A, -1j * drive)
    except (np.linalg.LinAlgError, sla.LinAlgWarning, FloatingPointError) as exc:
        raise LinearSolveError(f"singular steady-state system at delta={delta}") from exc
    if not np.all(np.isfinite(c)):
        raise LinearSolveError(f"non-finite steady state at delta={delta}")
    return c


def _parity_bases(gen: Generator, atol=1e-12):
    """Even/odd orthonormal bases under reflection about the chain centre,
    or ``None`` when the generator is not reflection symmetric."""
    z = gen.positions
    n = z.size
    c = 0.5 * (z[0] + z[-1])
    if n < 4 or not np.allclose(z - c, -(z[::-1] - c), rtol=0, atol=atol):
        return None
    if not np.array_equal(gen.detunings, gen.detunings[::-1]):
        return None
    h = n // 2
    i = np.arange(h)
    j = n - 1 - i
    s = 1.0 / np.sqrt(2.0)
    even = np.zeros((n, h + n % 2))
    odd = np.zeros((n, h))
    even[i, i] = s
    even[j, i] = s
    odd[i, i] = s
    odd[j, i] = -s
    if n % 2:
        even[h, h] = 1.0
    return even, odd


def _block_response(G, drive, detunings, observables):
    """``observables @ c`` for every detuning, ``c = -(i Delta + G)^{-1} i drive``."""
    w, V = np.linalg.eig(G)
    cond = np.linalg.cond(V)
    if np.isfinite(cond) and cond < EIG_COND_LIMIT:
        a = np.linalg.solve(V, -1j * drive)
        left = observables @ V
        return (left[None, :, :] * (a / (1j * detunings[:, None] + w[None, :]))[:, None, :]).sum(-1)
    out = np.empty((detunings.size, observables.shape[0]), dtype=complex)
    eye = np.eye(G.shape[0])
    for n_, det in enumerate(detunings):
        out[n_] = observables @ sla.solve(G + 1j * det * eye, -1j * drive)
    return out


def steady_state_spectrum(gen: Generator, deltas, drive, observables=None) -> np.ndarray:
    """Weak-drive response over a detuning grid.

    Returns ``observables @ c(delta)`` with shape ``(len(deltas), k)`` for a
    ``(k, n)`` observable matrix, or the amplitudes themselves when
    ``observables`` is ``None``. One eigendecomposition serves the whole grid;
    reflection-symmetric chains are split into even and odd blocks first.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    drive = np.asarray(drive, dtype=complex).reshape(-1)
    if not np.any(drive):
        raise InvalidArgumentError("drive is zero everywhere")
    obs = np.eye(gen.n, dtype=complex) if observables is None else np.atleast_2d(np.asarray(observables, dtype=complex))
    detunings = gen.params.to_rate(deltas)
    G = gen.matrix
    bases = _parity_bases(gen)
    if bases is None:
        out = _block_response(G, drive, detunings, obs)
    else:
        out = np.zeros((deltas.size, obs.shape[0]), dtype=complex)
        for B in bases:
            d_b = B.T @ drive
            if not np.any(np.abs(d_b) > 1e-300):
                continue
            G_b = B.T @ (G @ B)
            out += _block_response(G_b, d_b, detunings, obs @ B)
    if not np.all(np.isfinite(out)):
        raise LinearSolveError("non-finite steady-state response")
    return out


def field_functional(gen: Generator, z: float, direction: str, omega_p=None, include_at=False) -> np.ndarray:
    """Row ``w`` with ``E_dir(z) = E_in,dir(z) + w @ c``.

    Atoms exactly at ``z`` are excluded unless ``include_at`` is set (the
    step-function convention ``Theta(0) = 0``).
    """
    k = _wavevector(gen, omega_p)
    e = emission_coefficient(gen.params)
    zj = gen.positions
    if direction == "R":
        mask = zj <= z if include_at else zj < z
        return np.where(mask, e * np.exp(1j * k * (z - zj)), 0.0)
    if direction == "L":
        mask = zj >= z if include_at else zj > z
        return np.where(mask, e * np.exp(1j * k * (zj - z)), 0.0)
    raise InvalidArgumentError("direction must be 'R' or 'L'")


def reconstruct_fields(gen: Generator, amplitudes, z, omega_p=None, e_in=(0.0, 0.0)):
    """Right- and left-going guided fields at position(s) ``z``.

    ``e_in = (a_R, a_L)`` are the input amplitudes of ``a_R e^{ikz}`` and
    ``a_L e^{-ikz}``. An atom located exactly at ``z`` does not contribute.
    """
    c = np.asarray(amplitudes, dtype=complex)
    k = _wavevector(gen, omega_p)
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    er = np.array([field_functional(gen, x, "R", omega_p) @ c for x in zs]) + e_in[0] * np.exp(1j * k * zs)
    el = np.array([field_functional(gen, x, "L", omega_p) @ c for x in zs]) + e_in[1] * np.exp(-1j * k * zs)
    if np.ndim(z) == 0:
        return complex(er[0]), complex(el[0])
    return er, el


def local_fields(gen: Generator, amplitudes, omega_p=None, e_in=(0.0, 0.0)) -> np.ndarray:
    """Total guided field at every atom, ``E_R + E_L``.

    Each atom sees the mean of the left and right limits, i.e. the field of
    all other atoms plus half its own forward and backward emission.
    """
    c = np.asarray(amplitudes, dtype=complex)
    er, el = reconstruct_fields(gen, c, gen.positions, omega_p, e_in)
    return er + el + emission_coefficient(gen.params) * c


def guided_spectrum(gen: Generator, deltas) -> SpectrumTable:
    """``R, T, L`` for a unit guided field incident from the left.

    Reflection is referenced to the first atom, as in the transfer-matrix
    backend. Propagation phases use ``k_A`` throughout (Markov phases).
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    z0, z1 = gen.positions[0], gen.positions[-1]
    obs = np.vstack([
        field_functional(gen, z0, "L", include_at=True),
        field_functional(gen, z1, "R", include_at=True),
    ])
    resp = steady_state_spectrum(gen, deltas, guided_drive(gen), obs)
    r = resp[:, 0] / np.exp(1j * K_A * z0)
    t = (resp[:, 1] + np.exp(1j * K_A * z1)) / np.exp(1j * K_A * z1)
    R, T = np.abs(r) ** 2, np.abs(t) ** 2
    return SpectrumTable(
        {"delta": deltas, "R": R, "T": T, "L": 1.0 - R - T},
        meta={"gamma_total": gen.params.gamma_total, "backend": "spin_model"},
    )


def driven_impurity_spectrum(gen: Generator, deltas, with_guided=True) -> SpectrumTable:
    """Cavity spectra with the impurity driven from free space.

    ``Ic`` is the right-going intensity just right of the impurity and ``Tc``
    the intensity leaving through the right mirror, both in units of the
    resonant emission of an isolated driven atom.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    i0 = gen.impurity_sites
    if i0.size != 1:
        raise UnsupportedGeometryError("driven-impurity spectrum needs exactly one impurity")
    z_imp = gen.positions[i0[0]]
    obs = np.vstack([
        field_functional(gen, z_imp, "R", include_at=True),
        field_functional(gen, gen.positions[-1], "R", include_at=True),
    ])
    resp = steady_state_spectrum(gen, deltas, impurity_drive(gen), obs)
    cols = {"delta": deltas}
    if with_guided:
        g = guided_spectrum(gen, deltas)
        cols.update(R=g["R"], T=g["T"], L=g["L"])
    cols["Ic"] = np.abs(resp[:, 0]) ** 2
    cols["Tc"] = np.abs(resp[:, 1]) ** 2
    return SpectrumTable(cols, meta={"gamma_total": gen.params.gamma_total, "backend": "spin_model"})


# -- collective modes ---------------------------------------------------------


def _cavity_pairs(gen: Generator):
    """Active-site indices of mirror pairs ``(+j, -j)`` around the impurity,
    with ``j`` counted on the full (transparent-inclusive) lattice."""
    geom = gen.geometry
    imp = geom.indices(IMPURITY)
    if imp.size == 1:
        i0 = int(imp[0])
    elif imp.size == 0 and len(geom) % 2 and geom.roles[len(geom) // 2] == TRANSPARENT:
        # impurity removed: the empty central site still marks the centre
        i0 = len(geom) // 2
    else:
        raise UnsupportedGeometryError("collective modes need exactly one impurity site")
    n_side = min(i0, len(geom) - 1 - i0)
    if n_side == 0 or i0 != len(geom) - 1 - i0:
        raise UnsupportedGeometryError("collective modes need mirrors on both sides in equal number")
    roles = geom.roles
    pairs = []
    for j in range(1, n_side + 1):
        a, b = roles[i0 + j], roles[i0 - j]
        if (a == MIRROR) != (b == MIRROR):
            raise UnsupportedGeometryError(f"mirror site {j} has no partner at {-j}")
        if a == MIRROR:
            pairs.append((j, gen.local_index(i0 + j), gen.local_index(i0 - j)))
    if not pairs:
        raise UnsupportedGeometryError("no mirror atoms")
    return pairs


def collective_mode(gen: Generator, kind: str) -> CollectiveMode:
    """Cavity (sub-radiant) or radiant spin wave of the mirror atoms.

    cavity:  weight ``(-1)^j`` on both ``+j`` and ``-j``;
    radiant: ``(-1)^(j+1)`` on ``+j`` and ``-(-1)^(j+1)`` on ``-j``;
    impurity: the bare excited impurity.
    """
    if kind == "impurity":
        if gen.impurity_sites.size != 1:
            raise UnsupportedGeometryError("need exactly one impurity")
        v = np.zeros(gen.n, dtype=complex)
        v[gen.impurity_sites[0]] = 1.0
        return CollectiveMode(v, kind)
    pairs = _cavity_pairs(gen)
    v = np.zeros(gen.n, dtype=complex)
    for j, plus, minus in pairs:
        sign = (-1.0) ** j
        if kind == "cavity":
            v[plus] = v[minus] = sign
        elif kind == "radiant":
            v[plus] = -sign
            v[minus] = sign
        else:
            raise InvalidArgumentError(f"unknown mode kind {kind!r}")
    return CollectiveMode(v, kind)


def waveguide_decay_rate(gen: Generator, mode) -> float:
    """Population decay rate into the waveguide, ``v^H D v``."""
    v = mode.vector if isinstance(mode, CollectiveMode) else np.asarray(mode, dtype=complex)
    return float(np.real(np.vdot(v, gen.d_mat @ v)))


def mode_decay_rate(gen: Generator, mode) -> float:
    """Total population decay rate ``v^H (D + Gamma' I) v`` of a unit vector."""
    v = mode.vector if isinstance(mode, CollectiveMode) else np.asarray(mode, dtype=complex)
    return waveguide_decay_rate(gen, v) + gen.gamma_prime * float(np.real(np.vdot(v, v)))


def project(gen: Generator, basis) -> np.ndarray:
    """Generator restricted to the span of orthonormal ``basis`` vectors."""
    B = np.column_stack([b.vector if isinstance(b, CollectiveMode) else b for b in basis])
    return B.conj().T @ gen.matrix @ B


def impurity_coupling(gen: Generator, impurity: int) -> float:
    """Exchange coupling of impurity ``impurity`` (an active-site index) to the
    bright combination of mirror atoms, ``|| h_dd[imp, mirrors] ||``."""
    row = gen.h_dd[impurity, gen.mirror_sites]
    return float(np.linalg.norm(row))


# -- retrieval ---------------------------------------------------------------


def retrieval_efficiency(n_a: int, params: PhysicalParams) -> float:
    """Fraction of a radiant excitation emitted into the waveguide,
    ``N_A G1D / (N_A G1D + Gamma')``."""
    if n_a < 1:
        raise InvalidArgumentError("n_a must be at least 1")
    wg = n_a * params.gamma_1d
    return wg / (wg + params.gamma_prime)


def retrieval_efficiency_dynamic(n_a: int, params: PhysicalParams) -> float:
    """Same quantity from the dynamics of ``|1_rad>`` in a cavity chain."""
    if n_a < 2 or n_a % 2:
        raise InvalidArgumentError("n_a must be a positive even number of mirror atoms")
    gen = build_generator(build_cavity_chain(n_a // 2), params)
    wg, fs = emission_branching(gen, collective_mode(gen, "radiant").vector)
    return wg / (wg + fs)
