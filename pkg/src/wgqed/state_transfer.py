"""Adiabatic transfer of an excitation between two impurities through the
shared atomic-mirror cavity.

Each impurity is a three-level atom: a classical control ``Omega_{p,q}(t)``
couples its storage level ``s`` to ``e``, and ``e`` exchanges the excitation
with the cavity spin wave at rate ``g``. In the single-excitation sector the
reduced model lives on

    0: |s_p g_q, 0>   1: |e_p g_q, 0>   2: |g_p g_q, 1_cav>   3: |g_p e_q, 0>   4: |g_p s_q, 0>

with real couplings ``Omega_p, g, g, Omega_q`` along the chain and losses
``Gamma, kappa, Gamma`` on states 1-3. For this sign choice

    |D> ~ g Omega_q |0> - Omega_p Omega_q |2> + g Omega_p |4>

is an exact zero-energy eigenvector, so counter-intuitive pulses
(``Omega_q`` first) carry ``|0>`` to ``|4>``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import IMPURITY, K_A, ChainGeometry, PhysicalParams
from .errors import IntegrationError, InvalidArgumentError, UndefinedDarkStateError
from .jc_model import jc_from_physical
from .spin_model import build_generator, impurity_coupling
from .tables import write_csv

log = logging.getLogger(__name__)

STEPS_PER_TIMESCALE = 50
NORM_TOLERANCE = 1e-12
SHAPES = ("sincos", "reversed", "tabulated")


@dataclass(frozen=True)
class PulseSchedule:
    """Control pulses on ``0 <= t <= duration``.

    ``sincos``: ``Omega_p = Omega_0 sin(pi t / 2T)``, ``Omega_q = Omega_0 cos(pi t / 2T)``.
    ``reversed``: the two swapped (intuitive order).
    ``tabulated``: linear interpolation of sampled ``(t, Omega_p, Omega_q)``.
    """

    omega0: float
    duration: float
    shape: str = "sincos"
    table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidArgumentError(f"shape must be one of {SHAPES}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise InvalidArgumentError("duration must be positive and finite")
        if not (self.omega0 >= 0 and math.isfinite(self.omega0)):
            raise InvalidArgumentError("omega0 must be non-negative and finite")
        if (self.shape == "tabulated") != (self.table is not None):
            raise InvalidArgumentError("a table is required exactly for the tabulated shape")

    @classmethod
    def tabulated(cls, t, omega_p, omega_q) -> "PulseSchedule":
        t, op, oq = (np.asarray(a, dtype=float).copy() for a in (t, omega_p, omega_q))
        if t.ndim != 1 or t.size < 2 or op.shape != t.shape or oq.shape != t.shape:
            raise InvalidArgumentError("need matching 1-D samples, at least two")
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise InvalidArgumentError("sample times must start at 0 and increase")
        for a in (t, op, oq):
            a.flags.writeable = False
        peak = float(max(np.abs(op).max(), np.abs(oq).max()))
        return cls(peak, float(t[-1]), "tabulated", (t, op, oq))

    def omegas(self, t):
        """``(Omega_p(t), Omega_q(t))`` for scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        if self.shape == "tabulated":
            ts, op, oq = self.table
            return np.interp(t, ts, op), np.interp(t, ts, oq)
        phase = 0.5 * np.pi * t / self.duration
        s, c = self.omega0 * np.sin(phase), self.omega0 * np.cos(phase)
        return (s, c) if self.shape == "sincos" else (c, s)

    def to_csv(self, n_points: int = 201, path=None) -> str:
        t = np.linspace(0.0, self.duration, n_points)
        op, oq = self.omegas(t)
        return write_csv(["t", "omega_p", "omega_q"], zip(t, op, oq), path)


@dataclass(frozen=True)
class TransferResult:
    fidelity: float
    final_state: np.ndarray
    steps: int

    @property
    def loss(self) -> float:
        """Norm lost to dissipation, ``1 - ||psi(T)||^2``."""
        return float(1.0 - np.vdot(self.final_state, self.final_state).real)


@dataclass(frozen=True)
class LambdaSystem:
    """Reduced five-state model.

    ``cross_decay`` is an optional dissipative coupling ``-i c/2`` between the
    two excited impurity states, present when both radiate into the same
    waveguide (``G1D cos(k_A s)`` for separation ``s``).
    """

    g: float
    kappa: float
    gamma: float
    cross_decay: float = 0.0

    @classmethod
    def from_params(cls, n_a, params: PhysicalParams) -> "LambdaSystem":
        jc = jc_from_physical(n_a, params)
        return cls(jc.g, jc.kappa, jc.gamma)

    @classmethod
    def from_chain(cls, geom: ChainGeometry, params: PhysicalParams) -> "LambdaSystem":
        """Parameters read off a two-impurity chain, including the
        waveguide-mediated cross decay of the two impurities."""
        p, q = _impurity_pair(geom)
        gen = build_generator(geom, params)
        sep = geom.positions[q] - geom.positions[p]
        return cls(
            g=impurity_coupling(gen, gen.local_index(p)),
            kappa=params.gamma_prime,
            gamma=params.gamma_total,
            cross_decay=params.gamma_1d * math.cos(K_A * sep),
        )

    def hamiltonian(self, omega_p, omega_q) -> np.ndarray:
        """Effective non-Hermitian Hamiltonian(s); broadcasts over arrays."""
        op = np.asarray(omega_p, dtype=float)
        oq = np.asarray(omega_q, dtype=float)
        H = np.zeros(op.shape + (5, 5), dtype=complex)
        H[..., 0, 1] = H[..., 1, 0] = op
        H[..., 1, 2] = H[..., 2, 1] = self.g
        H[..., 2, 3] = H[..., 3, 2] = self.g
        H[..., 3, 4] = H[..., 4, 3] = oq
        H[..., 1, 1] = H[..., 3, 3] = -0.5j * self.gamma
        H[..., 2, 2] = -0.5j * self.kappa
        H[..., 1, 3] = H[..., 3, 1] = -0.5j * self.cross_decay
        return H

    def default_duration(self) -> float:
        return 50.0 / self.g

    def fidelity(self, omega0: float, duration: float | None = None, steps: int | None = None) -> float:
        duration = self.default_duration() if duration is None else duration
        return simulate_transfer_reduced(self, PulseSchedule(omega0, duration), steps).fidelity


def _impurity_pair(geom: ChainGeometry):
    imp = geom.indices(IMPURITY)
    if imp.size != 2:
        raise InvalidArgumentError("state transfer needs exactly two impurities")
    return int(imp[0]), int(imp[1])


def dark_state(system: LambdaSystem, schedule: PulseSchedule, t: float) -> np.ndarray:
    """Normalized instantaneous dark state at time ``t``."""
    op, oq = (float(x) for x in schedule.omegas(t))
    if op == 0 and oq == 0:
        raise UndefinedDarkStateError(f"both pulses vanish at t={t}")
    v = np.array([system.g * oq, 0.0, -op * oq, 0.0, system.g * op], dtype=complex)
    return v / np.linalg.norm(v)


def default_steps(duration: float, *rates: float) -> int:
    """RK4 step count giving ``h <= min(1/rate) / 50``."""
    fastest = max((abs(r) for r in rates if r), default=0.0)
    if fastest == 0:
        return 1000
    return max(1000, int(math.ceil(duration * fastest * STEPS_PER_TIMESCALE)))


def _rk4_propagators(system: LambdaSystem, schedule: PulseSchedule, steps: int) -> np.ndarray:
    """Stack of one-step RK4 propagators ``P_n`` with ``psi_{n+1} = P_n psi_n``.

    For a linear equation ``psi' = A(t) psi`` the classic RK4 update is the
    matrix polynomial ``I + h/6 (K1 + 2 K2 + 2 K3 + K4)`` with
    ``K1 = A(t)``, ``K2 = A(t+h/2)(I + h K1 / 2)``, ``K3 = A(t+h/2)(I + h K2 / 2)``,
    ``K4 = A(t+h)(I + h K3)``; building it for all steps at once is exact RK4.
    """
    h = schedule.duration / steps
    t = np.arange(steps) * h
    A = [-1j * system.hamiltonian(*schedule.omegas(tt)) for tt in (t, t + 0.5 * h, t + h)]
    eye = np.eye(5)
    k1 = A[0]
    k2 = A[1] @ (eye + 0.5 * h * k1)
    k3 = A[1] @ (eye + 0.5 * h * k2)
    k4 = A[2] @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def simulate_transfer_reduced(system: LambdaSystem, schedule: PulseSchedule, steps: int | None = None) -> TransferResult:
    """Fixed-step RK4 evolution of the reduced model from ``|s_p g_q, 0>``.

    Fidelity is the population of ``|g_p s_q, 0>`` at ``T``; population lost
    to dissipation is never renormalized.
    """
    if steps is None:
        steps = default_steps(schedule.duration, system.g, schedule.omega0, system.gamma, system.kappa)
    if steps < 1:
        raise InvalidArgumentError("steps must be positive")
    P = _rk4_propagators(system, schedule, steps)
    psi = np.zeros(5, dtype=complex)
    psi[0] = 1.0
    norm = 1.0
    for n in range(steps):
        psi = P[n] @ psi
        new = float(np.vdot(psi, psi).real)
        if not new <= norm + NORM_TOLERANCE:
            raise IntegrationError(f"norm grew at step {n}; step size too coarse")
        norm = new
    return TransferResult(float(abs(psi[4]) ** 2), psi, steps)


def simulate_transfer_full(
    geom: ChainGeometry, params: PhysicalParams, schedule: PulseSchedule, steps: int | None = None
) -> TransferResult:
    """Same protocol on the complete chain.

    The state holds one amplitude per non-transparent atom plus the two
    storage levels ``s_p, s_q`` (last two entries). Impurity decay comes only
    from the generator itself.
    """
    p, q = _impurity_pair(geom)
    gen = build_generator(geom, params)
    ip, iq = gen.local_index(p), gen.local_index(q)
    n = gen.n
    G = gen.matrix
    g = impurity_coupling(gen, ip)
    if steps is None:
        steps = default_steps(schedule.duration, g, schedule.omega0, params.gamma_total, params.gamma_prime)
    if steps < 1:
        raise InvalidArgumentError("steps must be positive")
    if params.gamma_1d > 0:
        # the fastest collective rate (bright mode of all mirrors) sets the stiffness
        steps = max(steps, int(math.ceil(schedule.duration * n * params.gamma_1d * 2)))

    def rhs(t, y):
        op, oq = schedule.omegas(t)
        dy = np.empty_like(y)
        dy[:n] = G @ y[:n]
        dy[ip] += -1j * op * y[n]
        dy[iq] += -1j * oq * y[n + 1]
        dy[n] = -1j * op * y[ip]
        dy[n + 1] = -1j * oq * y[iq]
        return dy

    h = schedule.duration / steps
    y = np.zeros(n + 2, dtype=complex)
    y[n] = 1.0
    norm = 1.0
    for k in range(steps):
        t = k * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        new = float(np.vdot(y, y).real)
        if not new <= norm + NORM_TOLERANCE:
            raise IntegrationError(f"norm grew at step {k}; step size too coarse")
        norm = new
    return TransferResult(float(abs(y[n + 1]) ** 2), y, steps)


@dataclass(frozen=True)
class FullChainModel:
    """Adapter giving the full chain the ``fidelity(omega0, duration)`` interface."""

    geometry: ChainGeometry
    params: PhysicalParams

    @property
    def g(self) -> float:
        gen = build_generator(self.geometry, self.params)
        return impurity_coupling(gen, gen.local_index(_impurity_pair(self.geometry)[0]))

    def default_duration(self) -> float:
        return 50.0 / self.g

    def fidelity(self, omega0: float, duration: float | None = None, steps: int | None = None) -> float:
        duration = self.default_duration() if duration is None else duration
        return simulate_transfer_full(self.geometry, self.params, PulseSchedule(omega0, duration), steps).fidelity


@dataclass(frozen=True)
class OptimumResult:
    omega0: float
    fidelity: float
    warning: bool
    evaluations: int

    @property
    def error(self) -> float:
        return 1.0 - self.fidelity


def _golden_max(f, a, b, rtol):
    """Golden-section maximization of ``f`` on ``[a, b]`` (log coordinates)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > rtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_omega0(
    model,
    duration: float | None = None,
    bracket=(0.05, 10.0),
    n_grid: int = 48,
    rtol: float = 1e-3,
    n_refine: int = 3,
) -> OptimumResult:
    """Maximize the transfer fidelity over the pulse amplitude.

    ``bracket`` is given in units of ``model.g``. ``F(Omega_0)`` has many
    closely spaced lobes, so a logarithmic grid scan comes first; the
    ``n_refine`` best interior grid maxima are then each refined by
    golden-section search to relative tolerance ``rtol`` and the best is
    kept. If the best grid point sits on the bracket edge the optimum is not
    enclosed: that grid point is returned with ``warning`` set.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise InvalidArgumentError("bracket must satisfy 0 < lo < hi")
    if n_grid < 3:
        raise InvalidArgumentError("n_grid must be at least 3")
    g = model.g
    duration = model.default_duration() if duration is None else duration
    cache = {}

    def fid(log_w):
        if log_w not in cache:
            cache[log_w] = model.fidelity(g * math.exp(log_w), duration)
        return cache[log_w]

    grid = np.linspace(math.log(lo), math.log(hi), n_grid)
    values = np.array([fid(x) for x in grid])
    best = int(np.argmax(values))
    if best in (0, n_grid - 1):
        log.warning("fidelity maximum at bracket edge (omega0 = %.4g g)", math.exp(grid[best]))
        return OptimumResult(g * math.exp(grid[best]), float(values[best]), True, len(cache))
    inner = values[1:-1]
    peaks = np.flatnonzero((inner >= values[:-2]) & (inner >= values[2:])) + 1
    peaks = peaks[np.argsort(values[peaks], kind="stable")[::-1][:n_refine]]
    x, fx = grid[best], values[best]
    for i in peaks:
        # log-coordinate width equals the relative tolerance on Omega_0
        xi, fi = _golden_max(fid, grid[i - 1], grid[i + 1], rtol)
        if fi > fx:
            x, fx = xi, fi
    return OptimumResult(g * math.exp(x), float(fx), False, len(cache))


def cooperativity_to_atoms(c: float, params: PhysicalParams) -> float:
    """Mirror atom number giving cooperativity ``c``; inverse of
    ``C = (G1D/Gamma)(N_A G1D/Gamma')``."""
    return c * params.gamma_total * params.gamma_prime / params.gamma_1d**2


def error_scaling(cooperativities, params: PhysicalParams, **optimize_kw):
    """Optimized transfer error of the reduced model for each cooperativity.

    Returns the per-point rows ``(C, N_A, omega0_star, fidelity)`` and the
    least-squares slope of ``log(1 - F*)`` against ``log C``.
    """
    rows = []
    for c in cooperativities:
        n_a = cooperativity_to_atoms(c, params)
        opt = optimize_omega0(LambdaSystem.from_params(n_a, params), **optimize_kw)
        rows.append((float(c), n_a, opt.omega0, opt.fidelity))
    cs = np.array([r[0] for r in rows])
    err = np.array([1.0 - r[3] for r in rows])
    slope = float(np.polyfit(np.log(cs), np.log(err), 1)[0])
    return rows, slope
