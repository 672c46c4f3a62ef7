"""Command-line front end.

    wgqed <command> [target] --config <path> [--out DIR] [--workers N] [--set key=value ...]

Commands: spectrum, cavity, dynamics, modes, transfer, sweep, figures.
Each run writes CSV tables plus a JSON sidecar with the resolved
configuration, the library version and a timestamp. Exit status is 0 on
success, 2 for configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, jc_model, spin_model, state_transfer, transfer_matrix
from .core import ChainGeometry, PhysicalParams, build_cavity_chain, build_mirror_chain, build_two_impurity_chain
from .errors import InvalidArgumentError, NumericalFailureError, UnsupportedGeometryError
from .figures import FIGURES
from .sweep import run_sweep
from .tables import Table

log = logging.getLogger("wgqed")

COMMANDS = ("spectrum", "cavity", "dynamics", "modes", "transfer", "sweep", "figures")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


# -- configuration -------------------------------------------------------------


@dataclass
class ExperimentConfig:
    command: str
    params: PhysicalParams
    data: dict = field(default_factory=dict)
    out: Path = Path(".")
    workers: int = 1

    def section(self, name) -> dict:
        value = self.data.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"'{name}' must be an object")
        return value


def parse_value(text: str):
    """JSON literal if it parses, else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, pairs) -> dict:
    """Apply ``a.b.c=value`` overrides to a nested dict (copied)."""
    data = copy.deepcopy(data)
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {key}: {part!r} is not an object")
        node[parts[-1]] = parse_value(raw)
    return data


def grid_values(spec, name="grid") -> np.ndarray:
    """A grid given as a list or as ``{start, stop, num[, log]}``."""
    if isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: need start, stop and num") from exc
        if num < 1:
            raise ConfigError(f"{name}: grid is empty")
        if spec.get("log", False):
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{name}: log grid needs positive bounds")
            return np.logspace(math.log10(start), math.log10(stop), num)
        return np.linspace(start, stop, num)
    if isinstance(spec, (list, tuple)):
        if not spec:
            raise ConfigError(f"{name}: grid is empty")
        try:
            arr = np.asarray(spec, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: values must be numbers") from exc
        return arr
    if isinstance(spec, (int, float)):
        return np.array([float(spec)])
    raise ConfigError(f"{name}: unsupported grid specification")


def build_geometry(spec: dict) -> ChainGeometry:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("geometry needs a 'kind'")
    kind = spec["kind"]
    args = {k: v for k, v in spec.items() if k != "kind"}
    try:
        if kind == "mirror":
            return build_mirror_chain(**args)
        if kind == "cavity":
            return build_cavity_chain(**args)
        if kind == "two_impurity":
            return build_two_impurity_chain(**args)
        if kind == "sites":
            return ChainGeometry.from_dict(args)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"geometry '{kind}': {exc!r}") from exc
    raise ConfigError(f"unknown geometry kind {kind!r}")


def load_config(command: str, path, overrides, out, workers) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data = apply_overrides(data, overrides)
    if data.get("command", command) != command:
        raise ConfigError(f"config is for command {data['command']!r}, not {command!r}")
    data["command"] = command
    params = PhysicalParams.from_dict(data.get("params", {}))
    data["params"] = params.to_dict()
    if workers < 1:
        raise ConfigError("--workers must be at least 1")
    return ExperimentConfig(command, params, data, Path(out), workers)


# -- commands ------------------------------------------------------------------


def _geometry(cfg):
    if "geometry" not in cfg.data:
        raise ConfigError(f"command {cfg.command!r} needs a 'geometry'")
    return build_geometry(cfg.data["geometry"])


def _backend(cfg):
    backend = cfg.data.get("backend", "transfer_matrix")
    if backend not in ("transfer_matrix", "spin_model"):
        raise ConfigError(f"unknown backend {backend!r}")
    return backend


def cmd_spectrum(cfg):
    geom = _geometry(cfg)
    deltas = grid_values(cfg.section("grid").get("delta", []), "grid.delta")
    if _backend(cfg) == "spin_model":
        table = spin_model.guided_spectrum(spin_model.build_generator(geom, cfg.params), deltas)
    else:
        table = transfer_matrix.chain_spectrum(geom, cfg.params, deltas, cfg.data.get("phase_mode", "exact"))
    return [("spectrum", table)]


def cmd_cavity(cfg):
    geom = _geometry(cfg)
    deltas = grid_values(cfg.section("grid").get("delta", []), "grid.delta")
    if _backend(cfg) == "spin_model":
        table = spin_model.driven_impurity_spectrum(spin_model.build_generator(geom, cfg.params), deltas)
    else:
        table = transfer_matrix.driven_impurity_spectrum_analytic(
            geom, cfg.params, deltas, cfg.data.get("phase_mode", "exact")
        )
    out = [("cavity", table)]
    if cfg.data.get("report_splitting", False):
        split = jc_model.peak_splitting(table)
        out.append(("splitting", Table({"splitting": [split], "law": [cfg.params.gamma_1d * math.sqrt(geom.n_mirror)]})))
    return out


def _initial_state(gen, spec):
    if isinstance(spec, str) and spec.startswith("site:"):
        v = np.zeros(gen.n, dtype=complex)
        v[gen.local_index(int(spec.split(":", 1)[1]))] = 1.0
        return v
    if spec in ("impurity", "cavity", "radiant"):
        return spin_model.collective_mode(gen, spec).vector
    raise ConfigError(f"unknown initial state {spec!r}")


def cmd_dynamics(cfg):
    geom = _geometry(cfg)
    gen = spin_model.build_generator(geom, cfg.params)
    times = grid_values(cfg.section("grid").get("t", []), "grid.t")
    traj = spin_model.evolve(gen, _initial_state(gen, cfg.data.get("initial", "impurity")), times)
    return [("dynamics", traj)]


def cmd_modes(cfg):
    geom = _geometry(cfg)
    gen = spin_model.build_generator(geom, cfg.params)
    kinds, wg, total = [], [], []
    for kind in ("impurity", "cavity", "radiant"):
        try:
            mode = spin_model.collective_mode(gen, kind)
        except UnsupportedGeometryError:
            continue
        kinds.append(kind)
        wg.append(spin_model.waveguide_decay_rate(gen, mode))
        total.append(spin_model.mode_decay_rate(gen, mode))
    if not kinds:
        raise UnsupportedGeometryError("geometry defines no collective modes")
    out = [("modes", Table({"mode": np.array(kinds, dtype=object), "waveguide_decay": wg, "total_decay": total}))]
    ss = cfg.section("steady_state")
    if ss:
        drive_kind = ss.get("drive", "impurity")
        if drive_kind == "impurity":
            drive = spin_model.impurity_drive(gen)
        elif drive_kind == "guided":
            drive = spin_model.guided_drive(gen)
        else:
            raise ConfigError(f"unknown drive {drive_kind!r}")
        c = spin_model.steady_state_weak_drive(gen, float(ss.get("delta", 0.0)), drive)
        out.append(("steady_state", Table({
            "site": gen.sites, "position": gen.positions, "re_c": c.real, "im_c": c.imag,
        })))
    return out


TRANSFER_COLUMNS = ("gamma1d_ratio", "NA", "C", "omega0_star", "fidelity", "one_minus_F")


def cmd_transfer(cfg):
    spec = cfg.section("transfer")
    model_kind = spec.get("model", "reduced")
    p = cfg.params
    if model_kind == "reduced":
        n_a = float(spec.get("n_a", 100))
        model = state_transfer.LambdaSystem.from_params(n_a, p)
    elif model_kind == "full":
        geom = _geometry(cfg)
        n_a = float(geom.n_mirror)
        model = state_transfer.FullChainModel(geom, p)
    else:
        raise ConfigError(f"unknown transfer model {model_kind!r}")
    g = model.g
    duration = float(spec.get("duration_g", 50.0)) / g
    if spec.get("omega0_g") is None:
        opt = state_transfer.optimize_omega0(model, duration, tuple(spec.get("bracket", (0.05, 10.0))))
        omega0, fid = opt.omega0, opt.fidelity
        if opt.warning:
            log.warning("optimum not bracketed; reporting the best grid point")
    else:
        omega0 = float(spec["omega0_g"]) * g
        fid = model.fidelity(omega0, duration)
    cooperativity = jc_model.jc_from_physical(n_a, p).cooperativity
    row = [p.gamma_1d / p.gamma_prime if p.gamma_prime else math.inf, n_a, cooperativity, omega0, fid, 1.0 - fid]
    table = Table({k: [v] for k, v in zip(TRANSFER_COLUMNS, row)})
    schedule = state_transfer.PulseSchedule(omega0, duration, spec.get("shape", "sincos"))
    t = np.linspace(0.0, duration, int(spec.get("schedule_points", 201)))
    op, oq = schedule.omegas(t)
    sched = Table({"t": t, "omega_p": op, "omega_q": oq})
    return [("transfer", table), ("schedule", sched)]


def cmd_sweep(cfg):
    spec = cfg.section("sweep")
    target = spec.get("target")
    axes = spec.get("axes")
    if not target or not isinstance(axes, dict) or not axes:
        raise ConfigError("sweep needs 'target' and a non-empty 'axes' object")
    resolved = {name: grid_values(v, f"sweep.axes.{name}").tolist() for name, v in axes.items()}
    for name, v in axes.items():
        # keep integer axes integral
        if isinstance(v, list) and all(isinstance(x, int) for x in v):
            resolved[name] = list(v)
    table = run_sweep(target, resolved, cfg.params.to_dict(), spec.get("options", {}), cfg.workers)
    return [("sweep", table)]


HANDLERS = {
    "spectrum": cmd_spectrum,
    "cavity": cmd_cavity,
    "dynamics": cmd_dynamics,
    "modes": cmd_modes,
    "transfer": cmd_transfer,
    "sweep": cmd_sweep,
}


# -- output --------------------------------------------------------------------


def write_outputs(out_dir: Path, stem: str, tables, echo: dict) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, table in tables:
        path = out_dir / f"{name}.csv"
        table.to_csv(path)
        paths.append(path)
    sidecar = {
        "config": echo,
        "version": __version__,
        "outputs": [p.name for p in paths],
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    side = out_dir / f"{stem}.json"
    side.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return paths + [side]


def run(cfg: ExperimentConfig, target: str | None = None) -> list[Path]:
    """Compute and write every artifact of one run; returns the written paths."""
    if cfg.command == "figures":
        names = list(FIGURES) if target in (None, "all") else [target]
        unknown = [n for n in names if n not in FIGURES]
        if unknown:
            raise ConfigError(f"unknown figure {unknown[0]!r}; choose from {sorted(FIGURES)}")
        written = []
        for name in names:
            settings, tables = FIGURES[name](cfg.workers)
            written += write_outputs(cfg.out, name, tables, {"command": "figures", "figure": name, "settings": settings})
        return written
    if target is not None:
        raise ConfigError(f"command {cfg.command!r} takes no target")
    tables = HANDLERS[cfg.command](cfg)
    return write_outputs(cfg.out, cfg.command, tables, cfg.data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wgqed", description="Atom-chain waveguide QED calculations.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("target", nargs="?", help="figure name for 'figures' (default: all)")
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted path); value parsed as JSON")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command != "figures" and args.config is None:
            raise ConfigError(f"command {args.command!r} requires --config")
        cfg = load_config(args.command, args.config, args.overrides, args.out, args.workers)
        paths = run(cfg, args.target)
    except (ConfigError, InvalidArgumentError, UnsupportedGeometryError) as exc:
        print(f"wgqed: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailureError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"wgqed: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
