"""Atom chains coupled to a one-dimensional waveguide.

Atomic Bragg mirrors, the cavities they form around an impurity atom, the
Jaynes-Cummings limit of those cavities, and adiabatic excitation transfer
between two impurities.

Submodules
----------
core            units, parameters and chain geometries
transfer_matrix linear scattering by 2x2 transfer matrices
spin_model      single-excitation dipole-dipole spin model
jc_model        Jaynes-Cummings figures of merit and peak finding
state_transfer  dark-state transfer between two impurities
sweep, figures  parameter grids and figure datasets (used by the CLI)
"""

from importlib.metadata import PackageNotFoundError, version

from .core import (
    IMPURITY,
    MIRROR,
    TRANSPARENT,
    ChainGeometry,
    PhysicalParams,
    build_cavity_chain,
    build_mirror_chain,
    build_two_impurity_chain,
)
from .errors import (
    IntegrationError,
    InvalidArgumentError,
    LinearSolveError,
    NoSplittingError,
    NumericalFailureError,
    UndefinedDarkStateError,
    UnsupportedGeometryError,
    WgqedError,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "IMPURITY",
    "MIRROR",
    "TRANSPARENT",
    "ChainGeometry",
    "PhysicalParams",
    "build_cavity_chain",
    "build_mirror_chain",
    "build_two_impurity_chain",
    "IntegrationError",
    "InvalidArgumentError",
    "LinearSolveError",
    "NoSplittingError",
    "NumericalFailureError",
    "UndefinedDarkStateError",
    "UnsupportedGeometryError",
    "WgqedError",
    "__version__",
]
