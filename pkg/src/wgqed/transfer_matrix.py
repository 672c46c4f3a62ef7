"""Linear scattering of guided light by atom chains via 2x2 transfer matrices.

Convention: a transfer matrix maps the amplitude pair ``(E_R, E_L)`` just left
of an element onto the pair just right of it. Chains are composed by a left
fold in order of increasing position, so the chain matrix is
``M = A_N P_N ... A_2 P_2 A_1`` with ``A`` single-atom and ``P`` propagation
matrices. Every factor has unit determinant, hence ``t = 1 / M[1, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import IMPURITY, K_A, ChainGeometry, PhysicalParams
from .errors import InvalidArgumentError, UnsupportedGeometryError
from .tables import SpectrumTable

PHASE_MODES = ("exact", "approx")


@dataclass(frozen=True)
class ScatterCoeffs:
    """Reflection/transmission amplitudes; scalars or arrays over detuning.

    ``r`` is the reflection amplitude for light incident from the left and
    ``r_right`` the one for incidence from the right. For a single atom they
    coincide.
    """

    r: complex | np.ndarray
    t: complex | np.ndarray
    r_right: complex | np.ndarray | None = None

    @property
    def R(self):
        return np.abs(self.r) ** 2

    @property
    def T(self):
        return np.abs(self.t) ** 2

    @property
    def L(self):
        return 1.0 - self.R - self.T


@dataclass(frozen=True)
class TransferMatrix:
    """A 2x2 complex transfer matrix, or a stack of them of shape ``(..., 2, 2)``."""

    m: np.ndarray

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        # (self @ other) acts with ``other`` first, i.e. ``other`` lies to the left
        return TransferMatrix(np.matmul(self.m, other.m))

    @property
    def det(self):
        m = self.m
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]

    @classmethod
    def from_coeffs(cls, r, t) -> "TransferMatrix":
        """Embed a symmetric, reciprocal scatterer with amplitudes ``(r, t)``."""
        r = np.asarray(r, dtype=complex)
        t = np.asarray(t, dtype=complex)
        m = np.empty(r.shape + (2, 2), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            m[..., 0, 0] = (t * t - r * r) / t
            m[..., 0, 1] = r / t
            m[..., 1, 0] = -r / t
            m[..., 1, 1] = 1.0 / t
        return cls(m)

    def coeffs(self) -> ScatterCoeffs:
        m = self.m
        with np.errstate(divide="ignore", invalid="ignore"):
            r = -m[..., 1, 0] / m[..., 1, 1]
            t = self.det / m[..., 1, 1]
            r_right = m[..., 0, 1] / m[..., 1, 1]
        return ScatterCoeffs(r, t, r_right)


def single_atom_coeffs(detuning, params: PhysicalParams) -> ScatterCoeffs:
    """Amplitudes of one atom probed at ``detuning`` (a rate, not ``delta``).

    ``r = -Gamma_1D / (Gamma - 2 i Delta)`` and ``t = 1 + r``.
    """
    det = np.asarray(detuning, dtype=float)
    r = -params.gamma_1d / (params.gamma_total - 2j * det)
    if r.ndim == 0:
        r = complex(r)
    return ScatterCoeffs(r, 1.0 + r, r)


def propagation_matrix(d, omega_p_over_omega_a=1.0, phase_mode: str = "exact") -> TransferMatrix:
    """Free propagation over ``d`` wavelengths.

    In ``"approx"`` mode the probe wavevector is replaced by ``k_A``, which is
    the near-resonance approximation ``exp(+-i omega_P d_M / v) ~ -1`` for
    ``d = lambda_A / 2``.
    """
    _check_mode(phase_mode)
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise InvalidArgumentError("propagation distance must be non-negative")
    ratio = np.asarray(omega_p_over_omega_a, dtype=float)
    k = K_A * (ratio if phase_mode == "exact" else np.ones_like(ratio))
    phase = np.exp(1j * k * d)
    m = np.zeros(np.shape(phase) + (2, 2), dtype=complex)
    m[..., 0, 0] = phase
    m[..., 1, 1] = np.exp(-1j * k * d)
    return TransferMatrix(m)


def band_gap_halfwidth(params: PhysicalParams) -> float:
    """Half-width (a rate) of the detuning window reflected by an infinite lattice."""
    return math.sqrt(params.omega_a * params.gamma_1d / math.pi)


def lorentzian_mirror(n_m: int, params: PhysicalParams, detuning=0.0):
    """Closed-form ``(R, T)`` of an ``n_m``-atom Bragg mirror below ``N_gap``."""
    det = np.asarray(detuning, dtype=float)
    ng = n_m * params.gamma_1d
    gp = params.gamma_prime
    denom = (gp + ng) ** 2 + 4 * det**2
    return ng**2 / denom, (gp**2 + 4 * det**2) / denom


def _check_mode(phase_mode):
    if phase_mode not in PHASE_MODES:
        raise InvalidArgumentError(f"phase_mode must be one of {PHASE_MODES}, got {phase_mode!r}")


def _power(x, n: int, combine: Callable):
    """``x`` combined with itself ``n >= 1`` times by binary exponentiation."""
    result = None
    while n:
        if n & 1:
            result = x if result is None else combine(result, x)
        n >>= 1
        if n:
            x = combine(x, x)
    return result


def _cells(geom: ChainGeometry):
    """Active sites grouped into runs of identical (spacing, offset) cells.

    Returns the first site's offset and a list of ``(spacing, offset, count)``.
    """
    mask = geom.active
    if not mask.any():
        raise InvalidArgumentError("chain has no scattering sites")
    z = geom.positions[mask]
    off = geom.detuning_offsets[mask]
    runs = []
    for dz, o in zip(np.diff(z), off[1:]):
        if runs and runs[-1][0] == dz and runs[-1][1] == o:
            runs[-1][2] += 1
        else:
            runs.append([float(dz), float(o), 1])
    return float(off[0]), runs


def _atom_matrices(detuning, params):
    # M = I + b [[1, 1], [-1, -1]] with b = r / t = -Gamma_1D / (Gamma' - 2 i Delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = -params.gamma_1d / (params.gamma_prime - 2j * detuning)
    m = np.empty(detuning.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = 1 + b
    m[..., 0, 1] = b
    m[..., 1, 0] = -b
    m[..., 1, 1] = 1 - b
    return m


def _phases(spacing, detuning, params, phase_mode):
    if phase_mode == "approx":
        return np.full(detuning.shape, np.exp(1j * K_A * spacing))
    return np.exp(1j * params.probe_wavevector(detuning) * spacing)


def _chain_tm(geom, params, detuning, phase_mode):
    first_off, runs = _cells(geom)
    total = _atom_matrices(detuning - first_off, params)
    for spacing, off, count in runs:
        ph = _phases(spacing, detuning, params, phase_mode)
        cell = _atom_matrices(detuning - off, params)
        cell[..., :, 0] *= ph[..., None]
        cell[..., :, 1] /= ph[..., None]
        total = np.matmul(_power(cell, count, np.matmul), total)
    return total


def _star(a, b):
    """Redheffer product of two reciprocal 2-ports, ``a`` left of ``b``."""
    ra_l, ta, ra_r = a
    rb_l, tb, rb_r = b
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / (1.0 - ra_r * rb_l)
    return (
        ra_l + ta * ta * rb_l * inv,
        ta * tb * inv,
        rb_r + tb * tb * ra_r * inv,
    )


def _chain_smatrix(geom, params, detuning, phase_mode):
    first_off, runs = _cells(geom)
    c = single_atom_coeffs(detuning - first_off, params)
    total = (np.asarray(c.r), np.asarray(c.t), np.asarray(c.r))
    for spacing, off, count in runs:
        ph = _phases(spacing, detuning, params, phase_mode)
        a = single_atom_coeffs(detuning - off, params)
        cell = (a.r * ph * ph, a.t * ph, np.asarray(a.r))
        total = _star(total, _power(cell, count, _star))
    return total


def chain_matrix(geom: ChainGeometry, params: PhysicalParams, deltas, phase_mode="exact") -> TransferMatrix:
    """Transfer matrix from the first to the last scattering site."""
    _check_mode(phase_mode)
    detuning = params.to_rate(np.atleast_1d(np.asarray(deltas, dtype=float)))
    return TransferMatrix(_chain_tm(geom, params, detuning, phase_mode))


def chain_coeffs(geom: ChainGeometry, params: PhysicalParams, deltas, phase_mode="exact") -> ScatterCoeffs:
    """Chain amplitudes over a grid of dimensionless detunings.

    The reflection reference plane is the first scattering site. Amplitudes
    come from folding scattering matrices (Redheffer products), which stay
    bounded where transfer-matrix entries grow like ``1/|t|``; deep inside a
    lossless stop band that keeps ``R + T`` at one to round-off.
    """
    _check_mode(phase_mode)
    detuning = params.to_rate(np.atleast_1d(np.asarray(deltas, dtype=float)))
    r, t, rr = _chain_smatrix(geom, params, detuning, phase_mode)
    return ScatterCoeffs(np.asarray(r, dtype=complex), np.asarray(t, dtype=complex), np.asarray(rr, dtype=complex))


def chain_spectrum(geom: ChainGeometry, params: PhysicalParams, deltas, phase_mode="exact") -> SpectrumTable:
    """Reflectance, transmittance and loss ``L = 1 - R - T`` of a chain."""
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    c = chain_coeffs(geom, params, deltas, phase_mode)
    R, T = c.R, c.T
    return SpectrumTable(
        {"delta": deltas, "R": R, "T": T, "L": 1.0 - R - T},
        meta={"gamma_total": params.gamma_total, "phase_mode": phase_mode, "backend": "transfer_matrix"},
    )


def finesse(geom: ChainGeometry, params: PhysicalParams, delta=0.0, phase_mode="exact"):
    """``pi / (1 - R)`` at dimensionless detuning ``delta``; ``inf`` when ``R == 1``."""
    R = chain_coeffs(geom, params, delta, phase_mode).R
    with np.errstate(divide="ignore"):
        f = np.where(R >= 1.0, np.inf, np.pi / (1.0 - np.minimum(R, 1.0)))
    return float(f[0]) if np.ndim(delta) == 0 else f


def _split_cavity(geom: ChainGeometry, atol=1e-9):
    """Index of the single impurity; checks the two mirrors are mirror images."""
    imp = geom.indices(IMPURITY)
    if imp.size != 1:
        raise UnsupportedGeometryError("driven-impurity spectrum needs exactly one impurity")
    i0 = int(imp[0])
    z = geom.positions - geom.positions[i0]
    zl, zr = z[:i0], z[i0 + 1 :]
    symmetric = (
        zl.size == zr.size
        and np.allclose(-zl[::-1], zr, rtol=0, atol=atol)
        and geom.roles[:i0][::-1] == geom.roles[i0 + 1 :]
        and np.array_equal(geom.detuning_offsets[:i0][::-1], geom.detuning_offsets[i0 + 1 :])
    )
    if not symmetric:
        raise UnsupportedGeometryError("mirrors must be identical and symmetric about the impurity")
    return i0


def driven_impurity_spectrum_analytic(
    geom: ChainGeometry, params: PhysicalParams, deltas, phase_mode="exact"
) -> SpectrumTable:
    """Cavity spectra for an impurity driven from free space.

    The impurity radiates into both guided directions; each mirror returns the
    field with amplitude ``rho = r_M exp(2 i k d_I)``. Summing the round trips
    gives the emitted amplitude ``a = s (1 - rho) / (1 - rho - 2 r_1 rho)``
    with ``s = Gamma / (Gamma - 2 i Delta_I)`` the bare emission of a driven
    atom, normalized to one on resonance.

    Columns: ``Ic`` is the right-going intensity just right of the impurity,
    ``Tc`` the intensity leaving through one mirror, and ``R, T, L`` describe
    the whole structure probed by a guided field.
    """
    _check_mode(phase_mode)
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    detuning = params.to_rate(deltas)
    i0 = _split_cavity(geom)
    imp_det = detuning - geom.detuning_offsets[i0]
    r1 = single_atom_coeffs(imp_det, params).r
    s = params.gamma_total / (params.gamma_total - 2j * imp_det)

    right_mask = np.zeros(len(geom), dtype=bool)
    right_mask[i0 + 1 :] = True
    right_mask &= geom.active
    if right_mask.any():
        right = ChainGeometry(
            geom.positions[right_mask], [geom.roles[i] for i in np.flatnonzero(right_mask)],
            geom.detuning_offsets[right_mask],
        )
        cm = chain_coeffs(right, params, deltas, phase_mode)
        d_i = float(right.positions[0] - geom.positions[i0])
        k = K_A if phase_mode == "approx" else params.probe_wavevector(detuning)
        rho = cm.r * np.exp(2j * k * d_i)
        t_m = cm.t
    else:
        rho = np.zeros_like(s)
        t_m = np.ones_like(s)
    Ic = np.abs(s) ** 2 / np.abs(1.0 - rho - 2.0 * r1 * rho) ** 2
    Tc = np.abs(t_m) ** 2 * Ic
    whole = chain_coeffs(geom, params, deltas, phase_mode)
    return SpectrumTable(
        {"delta": deltas, "R": whole.R, "T": whole.T, "L": whole.L, "Ic": Ic, "Tc": Tc},
        meta={"gamma_total": params.gamma_total, "phase_mode": phase_mode, "backend": "transfer_matrix"},
    )
