"""Physical parameters, unit conventions and chain geometries.

Units
-----
* Rates are measured in units of the free-space emission rate, so the usual
  choice is ``gamma_prime = 1``.
* Lengths are measured in resonant wavelengths ``lambda_A``; the resonant
  wavevector is therefore ``k_A = 2*pi``.
* Spectra are reported against the dimensionless detuning
  ``delta = Delta_A / (Gamma / 2)``. Functions that take a detuning as a rate
  name the argument ``detuning``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError

K_A = 2.0 * math.pi

MIRROR = "mirror"
IMPURITY = "impurity"
TRANSPARENT = "transparent"
ROLES = (MIRROR, IMPURITY, TRANSPARENT)

DEFAULT_OMEGA_A_OVER_GAMMA = 5.4e7
HALF_WAVELENGTH = 0.5
QUARTER_ANTINODE = 0.75


def _scale(x, factor):
    if np.ndim(x):
        return np.asarray(x, dtype=float) * factor
    return float(x) * factor


@dataclass(frozen=True)
class PhysicalParams:
    """Rate and frequency scales of the atom-waveguide interface.

    Parameters
    ----------
    gamma_1d : float
        Single-atom emission rate into the guided mode.
    gamma_prime : float
        Single-atom emission rate into all other channels.
    omega_a_over_gamma : float
        Atomic transition frequency in units of the total rate ``gamma_total``.
    """

    gamma_1d: float = 0.25
    gamma_prime: float = 1.0
    omega_a_over_gamma: float = DEFAULT_OMEGA_A_OVER_GAMMA

    def __post_init__(self):
        if not (self.gamma_1d >= 0 and self.gamma_prime >= 0):
            raise InvalidArgumentError("emission rates must be non-negative")
        if not self.gamma_total > 0:
            raise InvalidArgumentError("total emission rate must be positive")
        if not self.omega_a_over_gamma > 0:
            raise InvalidArgumentError("omega_a_over_gamma must be positive")

    @property
    def gamma_total(self) -> float:
        return self.gamma_1d + self.gamma_prime

    @property
    def omega_a(self) -> float:
        return self.omega_a_over_gamma * self.gamma_total

    @property
    def n_gap(self) -> float:
        """Atom number above which propagation-phase dispersion matters."""
        if self.gamma_1d == 0:
            return math.inf
        return math.sqrt(self.omega_a / self.gamma_1d)

    def to_rate(self, delta):
        """Convert dimensionless detuning ``delta`` to a rate."""
        return _scale(delta, self.gamma_total / 2.0)

    def to_delta(self, detuning):
        """Convert a detuning rate to the dimensionless ``delta``."""
        return _scale(detuning, 2.0 / self.gamma_total)

    def probe_wavevector(self, detuning=0.0):
        """Guided-mode wavevector (per ``lambda_A``) at a probe detuning."""
        return K_A * (1.0 + np.asarray(detuning, dtype=float) / self.omega_a)

    def to_dict(self) -> dict:
        return {
            "gamma_1d": self.gamma_1d,
            "gamma_prime": self.gamma_prime,
            "omega_a_over_gamma": self.omega_a_over_gamma,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalParams":
        return cls(
            gamma_1d=float(data.get("gamma_1d", 0.25)),
            gamma_prime=float(data.get("gamma_prime", 1.0)),
            omega_a_over_gamma=float(data.get("omega_a_over_gamma", DEFAULT_OMEGA_A_OVER_GAMMA)),
        )


@dataclass(frozen=True)
class Site:
    position: float
    role: str = MIRROR
    detuning_offset: float = 0.0


class ChainGeometry:
    """Ordered atom sites along the waveguide.

    Positions are stored as a read-only float array in units of ``lambda_A``.
    Transparent sites are kept for bookkeeping but never scatter or interact.
    """

    __slots__ = ("_positions", "_roles", "_offsets")

    def __init__(self, positions, roles, detuning_offsets=None):
        pos = np.array(positions, dtype=float).reshape(-1)
        roles = tuple(str(r) for r in roles)
        if detuning_offsets is None:
            offs = np.zeros(pos.size)
        else:
            offs = np.array(detuning_offsets, dtype=float).reshape(-1)
        if pos.size == 0:
            raise InvalidArgumentError("a chain needs at least one site")
        if len(roles) != pos.size or offs.size != pos.size:
            raise InvalidArgumentError("positions, roles and offsets differ in length")
        bad = set(roles) - set(ROLES)
        if bad:
            raise InvalidArgumentError(f"unknown site roles: {sorted(bad)}")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(offs)):
            raise InvalidArgumentError("positions and offsets must be finite")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise InvalidArgumentError("positions must be strictly increasing")
        pos.flags.writeable = False
        offs.flags.writeable = False
        self._positions = pos
        self._roles = roles
        self._offsets = offs

    @classmethod
    def from_sites(cls, sites: Iterable[Site]) -> "ChainGeometry":
        sites = list(sites)
        return cls(
            [s.position for s in sites],
            [s.role for s in sites],
            [s.detuning_offset for s in sites],
        )

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def roles(self) -> tuple:
        return self._roles

    @property
    def detuning_offsets(self) -> np.ndarray:
        return self._offsets

    @property
    def sites(self) -> tuple:
        return tuple(
            Site(float(p), r, float(o))
            for p, r, o in zip(self._positions, self._roles, self._offsets)
        )

    def __len__(self):
        return self._positions.size

    def __eq__(self, other):
        if not isinstance(other, ChainGeometry):
            return NotImplemented
        return (
            self._roles == other._roles
            and np.array_equal(self._positions, other._positions)
            and np.array_equal(self._offsets, other._offsets)
        )

    def __repr__(self):
        counts = {r: self._roles.count(r) for r in ROLES if r in self._roles}
        return f"ChainGeometry(n_sites={len(self)}, {counts})"

    def indices(self, role: str) -> np.ndarray:
        return np.array([i for i, r in enumerate(self._roles) if r == role], dtype=int)

    @property
    def active(self) -> np.ndarray:
        """Boolean mask of sites that scatter light."""
        return np.array([r != TRANSPARENT for r in self._roles], dtype=bool)

    @property
    def n_mirror(self) -> int:
        return self._roles.count(MIRROR)

    @property
    def n_impurity(self) -> int:
        return self._roles.count(IMPURITY)

    def with_roles(self, roles: Sequence[str]) -> "ChainGeometry":
        return ChainGeometry(self._positions, roles, self._offsets)

    def with_offsets(self, offsets) -> "ChainGeometry":
        return ChainGeometry(self._positions, self._roles, offsets)

    def to_dict(self) -> dict:
        return {
            "sites": [
                {"position": float(p), "role": r, "detuning_offset": float(o)}
                for p, r, o in zip(self._positions, self._roles, self._offsets)
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChainGeometry":
        sites = data["sites"]
        return cls(
            [float(s["position"]) for s in sites],
            [s.get("role", MIRROR) for s in sites],
            [float(s.get("detuning_offset", 0.0)) for s in sites],
        )


def dump_setup(params: PhysicalParams, geom: ChainGeometry, path=None) -> str:
    """Serialize parameters and geometry to a JSON document.

    Floats are written with Python's shortest round-trip repr (17 significant
    digits at most), so reloading reproduces positions bit for bit.
    """
    doc = {**params.to_dict(), **geom.to_dict()}
    text = json.dumps(doc, indent=1)
    if path is not None:
        Path(path).write_text(text)
    return text


def load_setup(source) -> tuple[PhysicalParams, ChainGeometry]:
    """Inverse of :func:`dump_setup`; accepts a path or a JSON string."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        source = Path(source).read_text()
    doc = json.loads(source)
    return PhysicalParams.from_dict(doc), ChainGeometry.from_dict(doc)


def _check_count(n, name):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidArgumentError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


def _check_length(d, name):
    if not (np.isfinite(d) and d > 0):
        raise InvalidArgumentError(f"{name} must be positive, got {d!r}")
    return float(d)


def build_mirror_chain(n_m: int, d_m: float = HALF_WAVELENGTH) -> ChainGeometry:
    """``n_m`` mirror atoms at spacing ``d_m``, the first one at ``z = 0``."""
    n_m = _check_count(n_m, "n_m")
    d_m = _check_length(d_m, "d_m")
    return ChainGeometry(np.arange(n_m) * d_m, (MIRROR,) * n_m)


def build_cavity_chain(
    n_m_per_side: int,
    d_m: float = HALF_WAVELENGTH,
    d_i: float = QUARTER_ANTINODE,
) -> ChainGeometry:
    """Impurity at ``z = 0`` between two identical Bragg mirrors.

    Mirror site ``j`` (``1 <= |j| <= n_m_per_side``) sits at
    ``sign(j) * (d_i + (|j| - 1) * d_m)``, so the layout is exactly symmetric.
    """
    n = _check_count(n_m_per_side, "n_m_per_side")
    d_m = _check_length(d_m, "d_m")
    d_i = _check_length(d_i, "d_i")
    right = d_i + np.arange(n) * d_m
    positions = np.concatenate([-right[::-1], [0.0], right])
    roles = (MIRROR,) * n + (IMPURITY,) + (MIRROR,) * n
    return ChainGeometry(positions, roles)


def build_two_impurity_chain(
    n_m_outer: int,
    gap_sites: int = 0,
    d_m: float = HALF_WAVELENGTH,
    d_i: float = QUARTER_ANTINODE,
) -> ChainGeometry:
    """Two impurities ``p`` and ``q`` sharing the cavity of the outer mirrors.

    Layout: ``n_m_outer`` mirror atoms, impurity ``p`` at ``d_i`` after the
    last of them, ``gap_sites`` transparent atoms on the ``d_m`` lattice
    starting ``d_i`` after ``p``, impurity ``q`` a distance ``d_i`` after the
    last transparent atom, and again ``n_m_outer`` mirror atoms.

    With the default spacings the p-q separation is ``1 + gap_sites / 2``
    wavelengths. ``gap_sites`` must be even so that this is an integer and both
    impurities couple with the same sign to the common mode.
    """
    n = _check_count(n_m_outer, "n_m_outer")
    if isinstance(gap_sites, bool) or int(gap_sites) != gap_sites or gap_sites < 0:
        raise InvalidArgumentError(f"gap_sites must be a non-negative integer, got {gap_sites!r}")
    gap_sites = int(gap_sites)
    d_m = _check_length(d_m, "d_m")
    d_i = _check_length(d_i, "d_i")
    separation = 2 * d_i + (gap_sites - 1) * d_m
    if not math.isclose(separation, round(separation), abs_tol=1e-12):
        raise InvalidArgumentError(
            f"p-q separation {separation} is not an integer number of wavelengths; "
            "use an even gap_sites with the default spacings"
        )

    left = -np.arange(n)[::-1] * d_m
    p = left[-1] + d_i
    gap = p + d_i + np.arange(gap_sites) * d_m
    q = p + separation
    right = q + d_i + np.arange(n) * d_m
    positions = np.concatenate([left, [p], gap, [q], right])
    roles = (MIRROR,) * n + (IMPURITY,) + (TRANSPARENT,) * gap_sites + (IMPURITY,) + (MIRROR,) * n
    return ChainGeometry(positions, roles)


def is_mirror_symmetric(geom: ChainGeometry, center: float | None = None, atol: float = 1e-12) -> bool:
    """True when positions, roles and offsets are symmetric about ``center``."""
    pos = geom.positions
    if center is None:
        center = 0.5 * (pos[0] + pos[-1])
    return (
        np.allclose(pos - center, -(pos[::-1] - center), rtol=0, atol=atol)
        and geom.roles == geom.roles[::-1]
        and np.array_equal(geom.detuning_offsets, geom.detuning_offsets[::-1])
    )
