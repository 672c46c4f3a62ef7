"""Parameter grids evaluated cell by cell, optionally across processes.

A sweep is a target name, an ordered mapping of axis name to values, and a
base configuration. Cells are the Cartesian product of the axes with the
last axis varying fastest. Results always come back in grid order, whatever
the worker count, and a failing cell yields a row with an error code instead
of aborting the sweep.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import jc_model, spin_model, state_transfer, transfer_matrix
from .core import PhysicalParams, build_cavity_chain, build_mirror_chain
from .errors import InvalidArgumentError, WgqedError
from .tables import Table

PARAM_KEYS = ("gamma_1d", "gamma_prime", "omega_a_over_gamma")


def expand_grid(axes: dict) -> list[dict]:
    """All cells of the grid, last axis fastest."""
    if not axes:
        raise InvalidArgumentError("sweep grid has no axes")
    names = list(axes)
    values = [list(np.atleast_1d(axes[n]).tolist()) for n in names]
    if any(len(v) == 0 for v in values):
        raise InvalidArgumentError("sweep grid is empty")
    return [dict(zip(names, combo)) for combo in itertools.product(*values)]


def cell_params(base: dict, cell: dict) -> PhysicalParams:
    """Physical parameters of one cell: base values overridden by axes."""
    data = dict(base)
    data.update({k: v for k, v in cell.items() if k in PARAM_KEYS})
    if "gamma1d_ratio" in cell:
        data["gamma_1d"] = cell["gamma1d_ratio"] * data.get("gamma_prime", 1.0)
    return PhysicalParams.from_dict(data)


def _even(n):
    n = int(round(n))
    if n < 2 or n % 2:
        raise InvalidArgumentError(f"cavity needs an even number of mirror atoms, got {n}")
    return n


# -- targets -------------------------------------------------------------------
# Each takes (params, cell, options) and returns an ordered dict of outputs.


def target_finesse(params, cell, options):
    geom = build_mirror_chain(int(cell["n_m"]))
    mode = options.get("phase_mode", "exact")
    R = float(transfer_matrix.chain_coeffs(geom, params, cell.get("delta", 0.0), mode).R[0])
    return {"R": R, "finesse": transfer_matrix.finesse(geom, params, cell.get("delta", 0.0), mode)}


def splitting_spectrum(n_a, params, backend="transfer_matrix", phase_mode="exact", num=8001, span=1.6):
    """Driven-impurity spectrum on a grid wide enough for the normal modes.

    The window extends ``span`` times the bare JC peak position each side.
    """
    n_a = _even(n_a)
    geom = build_cavity_chain(n_a // 2)
    law = params.gamma_1d * math.sqrt(n_a) / 2.0
    half = span * max(law, params.gamma_total) / (params.gamma_total / 2.0)
    deltas = np.linspace(-half, half, int(num))
    if backend == "spin_model":
        gen = spin_model.build_generator(geom, params)
        return spin_model.driven_impurity_spectrum(gen, deltas, with_guided=False)
    return transfer_matrix.driven_impurity_spectrum_analytic(geom, params, deltas, phase_mode)


def target_splitting(params, cell, options):
    n_a = cell.get("NA", cell.get("n_a"))
    spec = splitting_spectrum(
        n_a, params, options.get("backend", "transfer_matrix"), options.get("phase_mode", "exact"),
        options.get("num", 8001),
    )
    lo, hi = jc_model.peak_positions(spec, options.get("column", "Ic"))
    to_rate = params.gamma_total / 2.0
    law = params.gamma_1d * math.sqrt(n_a)
    split = (hi - lo) * to_rate
    return {
        "omega_minus": lo * to_rate,
        "omega_plus": hi * to_rate,
        "splitting": split,
        "law": law,
        "ratio": split / law,
    }


def target_transfer(params, cell, options):
    n_a = float(cell.get("NA", cell.get("n_a")))
    system = state_transfer.LambdaSystem.from_params(n_a, params)
    kw = {k: options[k] for k in ("bracket", "n_grid", "rtol", "n_refine") if k in options}
    if "bracket" in kw:
        kw["bracket"] = tuple(kw["bracket"])
    opt = state_transfer.optimize_omega0(system, **kw)
    jc = jc_model.jc_from_physical(n_a, params)
    return {
        "C": jc.cooperativity,
        "omega0_star": opt.omega0,
        "fidelity": opt.fidelity,
        "one_minus_F": 1.0 - opt.fidelity,
    }


def target_retrieval(params, cell, options):
    n_a = int(cell.get("NA", cell.get("n_a")))
    out = {"eta": spin_model.retrieval_efficiency(n_a, params)}
    if options.get("dynamic", True):
        out["eta_dynamic"] = spin_model.retrieval_efficiency_dynamic(n_a, params)
    return out


TARGETS = {
    "finesse": (target_finesse, ("R", "finesse")),
    "splitting": (target_splitting, ("omega_minus", "omega_plus", "splitting", "law", "ratio")),
    "transfer": (target_transfer, ("C", "omega0_star", "fidelity", "one_minus_F")),
    "retrieval": (target_retrieval, ("eta", "eta_dynamic")),
}


def evaluate_cell(job):
    """Worker entry point: ``job = (target, base_params, cell, options)``."""
    target, base, cell, options = job
    func, _ = TARGETS[target]
    try:
        return func(cell_params(base, cell), cell, options), ""
    except (WgqedError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return {}, type(exc).__name__


def run_sweep(target: str, axes: dict, base_params: dict | None = None, options: dict | None = None, workers: int = 1) -> Table:
    """Evaluate ``target`` over the grid; one row per cell in grid order.

    Columns are the axis names, the target outputs and ``error`` (empty on
    success, otherwise the exception class name). ``workers > 1`` spreads
    cells over processes without changing the result.
    """
    if target not in TARGETS:
        raise InvalidArgumentError(f"unknown sweep target {target!r}; choose from {sorted(TARGETS)}")
    if workers < 1:
        raise InvalidArgumentError("workers must be at least 1")
    cells = expand_grid(axes)
    base = dict(base_params or {})
    options = dict(options or {})
    if target == "retrieval" and not options.get("dynamic", True):
        outputs = ("eta",)
    else:
        outputs = TARGETS[target][1]
    jobs = [(target, base, cell, options) for cell in cells]
    if workers == 1 or len(jobs) == 1:
        results = [evaluate_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate_cell, jobs))
    names = list(axes)
    columns = {n: [c[n] for c in cells] for n in names}
    for name in outputs:
        columns[name] = [res.get(name, math.nan) for res, _ in results]
    columns["error"] = np.array([err for _, err in results], dtype=object)
    return Table(columns, meta={"target": target})
