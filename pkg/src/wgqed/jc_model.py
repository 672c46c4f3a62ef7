"""Jaynes-Cummings reduction of an impurity inside an atomic-mirror cavity.

The impurity couples to the sub-radiant cavity spin wave with strength
``g = G1D sqrt(N_A) / 2``; the cavity excitation decays at ``kappa = Gamma'``
and the impurity at ``Gamma = G1D + Gamma'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PhysicalParams
from .errors import InvalidArgumentError, NoSplittingError
from .tables import SpectrumTable, TrajectoryTable


@dataclass(frozen=True)
class JcParams:
    g: float
    kappa: float
    gamma: float

    @property
    def cooperativity(self) -> float:
        """``(2g)^2 / (kappa Gamma)``, i.e. ``(G1D/Gamma) (N_A G1D / Gamma')``.

        Normalized with the full vacuum Rabi splitting ``2g``; the bare
        ``g^2 / (kappa Gamma)`` is a quarter of this.
        """
        denom = self.kappa * self.gamma
        if denom == 0:
            return math.inf
        return 4.0 * self.g**2 / denom

    @property
    def strong_coupling(self) -> bool:
        """``g`` exceeds both loss rates."""
        return self.g > max(self.kappa, self.gamma)


def jc_from_physical(n_a, params: PhysicalParams) -> JcParams:
    """Closed-form JC parameters for ``n_a`` mirror atoms.

    ``n_a`` may be non-integer when it is only used to set ``g``.
    """
    if not n_a >= 1:
        raise InvalidArgumentError("n_a must be at least 1")
    return JcParams(
        g=0.5 * params.gamma_1d * math.sqrt(n_a),
        kappa=params.gamma_prime,
        gamma=params.gamma_total,
    )


def dressed_energies(jc: JcParams, n_cav: int) -> tuple[float, float]:
    """Energies ``+-g sqrt(n)`` of the ``n``-excitation dressed doublet."""
    if n_cav < 1:
        raise InvalidArgumentError("n_cav must be at least 1")
    e = jc.g * math.sqrt(n_cav)
    return e, -e


def _sinhc(x, t):
    """``sinh(x t) / x`` with the ``x -> 0`` limit ``t``."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x * t) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, t * (1 + (x * t) ** 2 / 6), np.sinh(safe * t) / safe)


def rabi_amplitudes(jc: JcParams, times):
    """``(c_e, c_cav)`` of the damped two-mode problem from ``c_e(0) = 1``.

    ``dc_e/dt = -(Gamma/2) c_e - i g c_cav`` and
    ``dc_cav/dt = -(kappa/2) c_cav - i g c_e``.
    """
    t = np.asarray(times, dtype=float)
    s = 0.25 * (jc.gamma + jc.kappa)
    a = 0.25 * (jc.kappa - jc.gamma)
    w = np.sqrt(complex(a * a - jc.g**2))
    env = np.exp(-s * t)
    sh = _sinhc(w, t)
    ce = env * (np.cosh(w * t) + a * sh)
    cc = -1j * jc.g * env * sh
    return ce, cc


def rabi_population_analytic(jc: JcParams, times) -> TrajectoryTable:
    """Impurity population ``P_e(t)`` of the damped JC doublet, plus the
    cavity population and the remaining norm."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    ce, cc = rabi_amplitudes(jc, t)
    pe, pc = np.abs(ce) ** 2, np.abs(cc) ** 2
    return TrajectoryTable(
        {"t": t, "Pe": pe, "Pcav": pc, "norm": pe + pc},
        meta={"backend": "jc_model"},
        amplitudes=np.column_stack([ce, cc]),
    )


def _local_maxima(y):
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])
    return np.flatnonzero(inner) + 1


def _refine(x, y, i):
    """Vertex of the parabola through three neighbouring samples."""
    x0, x1, x2 = x[i - 1 : i + 2]
    y0, y1, y2 = y[i - 1 : i + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a >= 0:
        return x1
    return -b / (2 * a)


def peak_positions(spectrum: SpectrumTable, column: str = "Ic", count: int = 2) -> np.ndarray:
    """Dimensionless detunings of the ``count`` highest local maxima, sorted."""
    x = np.asarray(spectrum.delta, dtype=float)
    y = np.asarray(spectrum[column], dtype=float)
    idx = _local_maxima(y)
    if idx.size < count:
        raise NoSplittingError(f"found {idx.size} local maxima in {column!r}, need {count}")
    top = idx[np.argsort(y[idx], kind="stable")[::-1][:count]]
    return np.sort([_refine(x, y, i) for i in top])


def peak_splitting(spectrum: SpectrumTable, column: str = "Ic") -> float:
    """Separation of the two dominant maxima of ``column``, as a rate.

    Maxima are refined by 3-point quadratic interpolation on the detuning
    grid; the result is converted with ``spectrum.meta['gamma_total']``.
    """
    lo, hi = peak_positions(spectrum, column, 2)
    gamma_total = spectrum.meta.get("gamma_total")
    if gamma_total is None:
        raise InvalidArgumentError("spectrum meta lacks 'gamma_total'")
    return float(hi - lo) * gamma_total / 2.0
