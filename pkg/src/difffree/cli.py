"""Command-line experiment runner.

Every subcommand resolves a full parameter set (documented defaults, then
an optional JSON config file, then command-line flags), writes
``manifest.json`` into its own output directory, then writes its CSVs. CSVs
start with a ``# manifest <hash>`` line followed by a header row; floats are
written with 17 significant digits so identical configs give identical bytes.

Exit status: 0 success, 2 configuration error, 3 numerical abort.
The output root defaults to ``$DIFFFREE_OUTPUT`` or ``./difffree-output``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from difffree import __version__, presets
from difffree.bc import BoundaryCondition
from difffree.errors import SolverError

OUTPUT_ENV = "DIFFFREE_OUTPUT"
EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3


class ConfigError(ValueError):
    """Malformed, conflicting or unknown configuration."""


def _nu_list(value):
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [s for s in str(value).replace(" ", "").split(",") if s]
    try:
        nus = [float(v) for v in items]
    except ValueError:
        raise ConfigError(f"bad nu list {value!r}") from None
    if not nus or any(not (v > 0 and math.isfinite(v)) for v in nus):
        raise ConfigError(f"nu list must hold positive numbers, got {value!r}")
    return nus


def _bool(value):
    if isinstance(value, bool):
        return value
    s = str(value).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _optional_float(value):
    return None if value is None or value == "" else float(value)


@dataclass(frozen=True)
class Param:
    name: str
    type: object
    default: object
    help: str
    choices: tuple | None = None
    hashed: bool = True  # execution-only knobs stay out of the manifest hash


_HEAT_BC = ("all", "noslip", "stressfree", "diffusionfree", "difffree")
_CHANNEL_BC = ("noslip", "stressfree", "difffree", "diffusionfree", "lions")

SCHEMA: dict[str, tuple[Param, ...]] = {
    "heat-compare": (
        Param("nu", float, 0.1, "viscosity"),
        Param("t_end", float, 0.1, "final time"),
        Param("ny", int, 3001, "grid points on [0, length]"),
        Param("length", float, 30.0, "truncation length of the half-line"),
        Param("dt", _optional_float, None, "time step (default t_end/100)"),
        Param("bc", str, "all", "wall condition", _HEAT_BC),
    ),
    "heat-sweep": (
        Param("nu_list", _nu_list, "1e-3,1e-4,1e-5,1e-6", "comma-separated viscosities"),
        Param("t_end", float, 0.1, "final time"),
        Param("length", float, 30.0, "truncation length of the half-line"),
        Param("points_per_layer", float, 8.0, "grid points across sqrt(nu t)"),
        Param("nsteps", int, 200, "time steps per run"),
        Param("bc", str, "all", "wall condition", _HEAT_BC),
        Param("workers", int, 1, "threads for independent sweep members", hashed=False),
    ),
    "channel-run": (
        Param("nu", float, 1e-2, "viscosity"),
        Param("bc", str, "difffree", "wall condition", _CHANNEL_BC),
        Param("nx", int, 32, "Fourier points in x"),
        Param("ny", int, 65, "grid points across the channel, walls included"),
        Param("lx", float, 1.0, "channel period"),
        Param("dt", float, 2e-3, "time step"),
        Param("t_end", float, 1.0, "final time"),
        Param("omega0", str, "compatible-channel", "preset name or field CSV path (x,y,omega)"),
        Param("bulk_velocity", float, 0.0, "initial mean horizontal velocity"),
        Param("diag_stride", int, 10, "steps between diagnostics rows"),
        Param("dealias", _bool, True, "apply the 2/3 rule"),
    ),
    "channel-sweep": (
        Param("nu_list", _nu_list, "4e-3,2e-3,1e-3,5e-4", "comma-separated viscosities"),
        Param("bc", str, "difffree", "wall condition", _CHANNEL_BC),
        Param("nx", int, 32, "Fourier points in x"),
        Param("ny", int, 129, "grid points across the channel, walls included"),
        Param("lx", float, 1.0, "channel period"),
        Param("dt", float, 2e-3, "time step"),
        Param("t_end", float, 0.5, "final time"),
        Param("omega0", str, "compatible-channel", "preset name or field CSV path (x,y,omega)"),
        Param("workers", int, 1, "threads for independent sweep members", hashed=False),
    ),
    "annulus-run": (
        Param("nu", float, 1e-3, "viscosity"),
        Param("bc", str, "difffree", "wall condition", ("difffree", "diffusionfree", "lions", "stressfree")),
        Param("a", float, 1.0, "inner radius"),
        Param("b", float, 2.0, "outer radius"),
        Param("ntheta", int, 128, "Fourier points in theta"),
        Param("nr", int, 129, "radial points, walls included"),
        Param("gamma", _optional_float, None, "inner circulation (default: the preset's)"),
        Param("omega0", str, "annulus-vortex", "preset name", tuple(presets.names("annulus"))),
        Param("dt", float, 5e-3, "time step"),
        Param("t_end", float, 5.0, "final time"),
        Param("diag_stride", int, 20, "steps between diagnostics rows"),
    ),
    "blprofile-run": (
        Param("preset", str, "neumann-flux", "zero, neumann-flux, or a CSV path with columns z,G"),
        Param("t_end", float, 1.0, "final time"),
        Param("nz", int, 1024, "grid points on [0, zmax]"),
        Param("zmax", float, 30.0, "truncation of the half-line"),
        Param("dt", float, 1e-3, "time step"),
        Param("h", float, 1.0, "wall flux for neumann-flux and custom presets"),
    ),
    "energy-growth": (
        Param("lx", float, 1.0, "channel period"),
        Param("nu", float, 1.0, "viscosity"),
        Param("nr", int, 256, "quadrature intervals"),
    ),
    "report": (),
}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    output_dir: Path
    seed: int = 0
    execution: dict = field(default_factory=dict)

    def hashed_payload(self) -> dict:
        return {"kind": self.kind, "params": self.params, "seed": self.seed, "version": __version__}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.hashed_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def run_dir(self) -> Path:
        if self.kind == "report":
            return self.output_dir
        return self.output_dir / f"{self.kind}-{self.hash[:12]}"

    def manifest(self, status: str = "pending", error: str | None = None) -> dict:
        used = {}
        for key in ("omega0", "preset"):
            name = self.params.get(key)
            if name in presets.PRESETS:
                used[name] = presets.PRESETS[name].version
        return {
            "artifact": "difffree",
            "version": __version__,
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "presets": used,
            "execution": self.execution,
            "hash": self.hash,
            "status": status,
            "error": error,
        }


# -- parsing -----------------------------------------------------------------


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="difffree", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"difffree {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="experiment")
    for kind, params in SCHEMA.items():
        p = sub.add_parser(kind, help=f"run {kind}", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.add_argument("--config", default=None, help="JSON file of parameters (flags override it)")
        p.add_argument("--output", default=argparse.SUPPRESS,
                       help=f"output root (default ${OUTPUT_ENV} or ./difffree-output)")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="recorded in the manifest (default 0)")
        for prm in params:
            p.add_argument(_flag(prm.name), dest=prm.name, default=argparse.SUPPRESS,
                           choices=prm.choices, metavar=prm.name.upper(),
                           help=f"{prm.help} (default {prm.default})")
    return parser


def _coerce(prm: Param, value):
    try:
        out = prm.type(value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {prm.name}: {value!r} ({exc})") from None
    if prm.choices and out not in prm.choices:
        raise ConfigError(f"{prm.name} must be one of {prm.choices}, got {out!r}")
    return out


def _read_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def parse_config(args, file=None) -> ExperimentConfig:
    """Resolve defaults < config file < flags into an ExperimentConfig.

    ``args`` is an argv list or an argparse Namespace. The config file is a
    JSON object keyed by parameter name (underscores, as in the flags without
    the dashes); it may also carry ``kind``, ``output`` and ``seed``.
    Unknown keys raise ConfigError.
    """
    if not isinstance(args, argparse.Namespace):
        parser = build_parser()
        try:
            args = parser.parse_args(list(args))
        except SystemExit as exc:
            raise ConfigError("invalid command line") from exc
    flags = dict(vars(args))
    kind = flags.pop("kind")
    file = file if file is not None else flags.pop("config", None)
    flags.pop("config", None)
    schema = {p.name: p for p in SCHEMA[kind]}

    merged = {name: p.default for name, p in schema.items()}
    output = os.environ.get(OUTPUT_ENV) or "difffree-output"
    seed = 0
    if file is not None:
        data = _read_config_file(file)
        if data.get("kind", kind) != kind:
            raise ConfigError(f"config file is for {data['kind']!r}, not {kind!r}")
        for key, value in data.items():
            if key == "kind":
                continue
            if key == "output":
                output = value
            elif key == "seed":
                seed = value
            elif key in schema:
                merged[key] = value
            else:
                raise ConfigError(f"unknown key {key!r} for {kind}")
    output = flags.pop("output", output)
    seed = flags.pop("seed", seed)
    for key, value in flags.items():
        if key not in schema:
            raise ConfigError(f"unknown flag {key!r} for {kind}")
        merged[key] = value

    params, execution = {}, {}
    for name, prm in schema.items():
        value = merged[name]
        value = prm.type(value) if value is None and prm.type is _optional_float else value
        value = _coerce(prm, value) if value is not None else None
        (params if prm.hashed else execution)[name] = value
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    _validate(kind, params)
    return ExperimentConfig(kind, params, Path(output), seed, execution)


def _validate(kind: str, params: dict):
    positive = ("nu", "t_end", "dt", "length", "lx", "zmax", "a", "b")
    for key in positive:
        if key in params and params[key] is not None:
            v = params[key]
            ok = v >= 0 if key in ("nu", "t_end") else v > 0
            if not (ok and math.isfinite(v)):
                raise ConfigError(f"{key} must be {'non-negative' if key in ('nu', 't_end') else 'positive'}, got {v}")
    if kind == "annulus-run" and not params["a"] < params["b"]:
        raise ConfigError("need a < b")
    for key in ("nx", "ny", "nr", "ntheta", "nz", "nsteps", "diag_stride"):
        if key in params and params[key] < 1:
            raise ConfigError(f"{key} must be positive")


# -- output ------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header, rows, manifest_hash: str):
    buf = io.StringIO()
    buf.write(f"# manifest {manifest_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_manifest(cfg: ExperimentConfig, status: str, error: str | None = None):
    cfg.run_dir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(cfg.manifest(status, error), indent=2, sort_keys=True) + "\n"
    (cfg.run_dir / "manifest.json").write_text(text, encoding="utf-8")


def read_field_csv(path, grid) -> np.ndarray:
    """Vorticity from a CSV with columns x, y, omega (row-major, x outer)."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.reader(ln for ln in fh if not ln.startswith("#")) if r]
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from None
    if not rows or [h.strip() for h in rows[0][:3]] != ["x", "y", "omega"]:
        raise ConfigError(f"field file {path} must start with columns x,y,omega")
    try:
        vals = np.array([[float(v) for v in r[:3]] for r in rows[1:]], dtype=float).reshape(-1, 3)
    except ValueError as exc:
        raise ConfigError(f"field file {path}: {exc}") from None
    if vals.shape[0] != grid.nx * grid.ny:
        raise ConfigError(f"field file has {vals.shape[0]} rows, grid needs {grid.nx * grid.ny}")
    X, Y = grid.mesh()
    if not (np.allclose(vals[:, 0], X.ravel()) and np.allclose(vals[:, 1], Y.ravel())):
        raise ConfigError("field file coordinates do not match the grid")
    return vals[:, 2].reshape(grid.shape)


# -- experiments -------------------------------------------------------------


def _heat_bcs(name: str):
    return list(BoundaryCondition) if name == "all" else [BoundaryCondition.parse(name)]


_HEAT_COLUMNS = {
    BoundaryCondition.NO_SLIP: "noslip",
    BoundaryCondition.STRESS_FREE: "stressfree",
    BoundaryCondition.DIFFUSION_FREE: "difffree",
}


def _run_heat_compare(cfg, out):
    from difffree.heat1d import compare_conditions

    p = cfg.params
    res = compare_conditions(p["nu"], p["t_end"], p["ny"], p["length"], p["dt"], _heat_bcs(p["bc"]))
    order = list(_HEAT_COLUMNS)
    sol = [res.solutions.get(bc) for bc in order]
    rows = []
    for i, y in enumerate(res.y):
        rows.append([y] + [None if s is None else s[i] for s in sol] + [res.outer[i]])
    write_csv(out / "heat_compare.csv", ["y"] + [f"u_{_HEAT_COLUMNS[b]}" for b in order] + ["u_outer"],
              rows, cfg.hash)
    corr = [[y] + [None if s is None else s[i] - res.outer[i] for s in sol] for i, y in enumerate(res.y)]
    write_csv(out / "corrector.csv", ["y"] + [f"c_{_HEAT_COLUMNS[b]}" for b in order], corr, cfg.hash)
    amps = [[_HEAT_COLUMNS[bc], res.amplitudes[bc]] for bc in order if bc in res.amplitudes]
    write_csv(out / "amplitudes.csv", ["bc", "amplitude"], amps, cfg.hash)
    for name, a in amps:
        print(f"{name:>10s}  sup|u - u_outer| = {_fmt(a)}")


def _run_heat_sweep(cfg, out):
    from difffree.heat1d import heat_sweep

    p = cfg.params
    rows, fits = heat_sweep(p["nu_list"], _heat_bcs(p["bc"]), p["t_end"], p["length"],
                            p["points_per_layer"], p["nsteps"], workers=cfg.execution.get("workers", 1))
    write_csv(out / "sweep.csv", ["nu", "amplitude", "bc"],
              [[nu, amp, _HEAT_COLUMNS[bc]] for nu, amp, bc in rows], cfg.hash)
    write_csv(out / "fits.csv", ["bc", "slope", "intercept", "max_rel_residual"],
              [[_HEAT_COLUMNS[bc], f.slope, f.intercept, f.max_rel_residual] for bc, f in fits.items()], cfg.hash)
    for bc, f in fits.items():
        print(f"{_HEAT_COLUMNS[bc]:>10s}  slope = {f.slope:.4f}")


def _channel_setup(p):
    from difffree.channel2d import ChannelGrid

    try:
        grid = ChannelGrid(p["nx"], p["ny"], p["lx"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    name = p["omega0"]
    if name in presets.PRESETS:
        try:
            omega0 = presets.build(name, grid, "channel")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif Path(name).is_file():
        omega0 = read_field_csv(name, grid)
    else:
        raise ConfigError(f"omega0 {name!r} is neither a channel preset ({', '.join(presets.names('channel'))}) "
                          "nor a readable file")
    return grid, omega0


def _write_diagnostics(path, records, cfg):
    from difffree.diagnostics import CSV_COLUMNS

    write_csv(path, list(CSV_COLUMNS), [r.as_row() for r in records], cfg.hash)


def _run_channel(cfg, out):
    from difffree.channel2d import ChannelConfig, run, velocity_from_vorticity

    p = cfg.params
    grid, omega0 = _channel_setup(p)
    try:
        ccfg = ChannelConfig(p["nu"], p["dt"], grid, BoundaryCondition.parse(p["bc"]), p["t_end"], p["dealias"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    state, records = run(ccfg, omega0, diag_stride=p["diag_stride"], bulk_velocity=p["bulk_velocity"])
    _write_diagnostics(out / "diagnostics.csv", records, cfg)
    u, v = velocity_from_vorticity(state)
    X, Y = grid.mesh()
    cols = [X.ravel(), Y.ravel(), state.omega.values.ravel(), u.values.ravel(), v.values.ravel()]
    write_csv(out / "field.csv", ["x", "y", "omega", "u", "v"], zip(*cols), cfg.hash)
    last = records[-1]
    print(f"t = {_fmt(last.t)}  enstrophy = {_fmt(last.enstrophy)}  energy = {_fmt(last.energy)}")


def _run_channel_sweep(cfg, out):
    from concurrent.futures import ThreadPoolExecutor

    from difffree.channel2d import ChannelConfig, l2_distance, run
    from difffree.diagnostics import fit_power_law

    p = cfg.params
    grid, omega0 = _channel_setup(p)
    bc = BoundaryCondition.parse(p["bc"])

    def final(nu):
        return run(ChannelConfig(nu, p["dt"], grid, bc, p["t_end"]), omega0, diag_stride=10**9)[0]

    nus = p["nu_list"]
    with ThreadPoolExecutor(max_workers=max(1, cfg.execution.get("workers", 1))) as ex:
        states = list(ex.map(final, [0.0] + nus))
    gaps = [l2_distance(s, states[0]) for s in states[1:]]
    write_csv(out / "sweep.csv", ["nu", "l2_gap_vs_euler"], zip(nus, gaps), cfg.hash)
    rows = []
    fit = None
    if len(nus) >= 3:
        fit = fit_power_law(nus, gaps)
        rows.append([fit.slope, fit.intercept, fit.max_rel_residual])
    write_csv(out / "fit.csv", ["slope", "intercept", "max_rel_residual"], rows, cfg.hash)
    print(f"slope = {fit.slope:.4f}" if fit else "fewer than 3 viscosities: no fit")


def _run_annulus(cfg, out):
    from difffree.annulus2d import AnnulusConfig, AnnulusGrid, annulus_velocity, run

    p = cfg.params
    try:
        grid = AnnulusGrid(p["ntheta"], p["nr"], p["a"], p["b"])
        acfg = AnnulusConfig(p["nu"], p["dt"], grid, BoundaryCondition.parse(p["bc"]), p["t_end"])
        preset = presets.get(p["omega0"], "annulus")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    gamma = preset.gamma if p["gamma"] is None else p["gamma"]
    state, records = run(acfg, preset.build(grid), gamma=gamma, diag_stride=p["diag_stride"])
    _write_diagnostics(out / "diagnostics.csv", records, cfg)
    ur, ut = annulus_velocity(state)
    TH, R = grid.mesh()
    cols = [R.ravel(), TH.ravel(), state.omega.values.ravel(), ur.values.ravel(), ut.values.ravel()]
    write_csv(out / "field.csv", ["r", "theta", "omega", "u_r", "u_theta"], zip(*cols), cfg.hash)
    last = records[-1]
    print(f"t = {_fmt(last.t)}  circ_inner = {_fmt(last.circ_inner)}  circ_outer = {_fmt(last.circ_outer)}")


def _custom_bl_problem(path, p):
    from difffree.blprofile import BLProfileProblem

    try:
        data = np.loadtxt(path, delimiter=",", comments="#", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read profile source {path}: {exc}") from None
    if data.shape[1] < 2:
        raise ConfigError("profile source CSV needs columns z,G")
    zs, gs = data[:, 0], data[:, 1]
    if np.any(np.diff(zs) <= 0):
        raise ConfigError("profile source z must increase")
    h = p["h"]
    return BLProfileProblem(G=lambda t, x, z: np.interp(z, zs, gs, right=0.0), H=lambda t, x: h,
                            z_max=p["zmax"], nz=p["nz"], dt=p["dt"])


def _run_blprofile(cfg, out):
    from difffree.blprofile import PRESETS, preset_problem, reconstruct_ubl, solve_bl_profile

    p = cfg.params
    try:
        if p["preset"] in PRESETS:
            prob = preset_problem(p["preset"], p["nz"], p["zmax"], p["h"], p["dt"])
        elif Path(p["preset"]).is_file():
            prob = _custom_bl_problem(p["preset"], p)
        else:
            raise ConfigError(f"preset {p['preset']!r} is neither {PRESETS} nor a readable file")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = solve_bl_profile(prob, p["t_end"])
    U = reconstruct_ubl(res.omega, res.z)
    rows = [[res.t, x, z, res.omega[i, j], U[i, j]] for i, x in enumerate(res.x) for j, z in enumerate(res.z)]
    write_csv(out / "profile.csv", ["t", "x", "z", "Omega", "U"], rows, cfg.hash)
    print(f"t = {_fmt(res.t)}  max|Omega| = {_fmt(float(np.max(np.abs(res.omega))))}")


def _run_energy_growth(cfg, out):
    from difffree.diagnostics import energy_growth_check

    p = cfg.params
    try:
        eg = energy_growth_check(p["lx"], p["nu"], p["nr"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_csv(out / "energy_growth.csv",
              ["lx", "nu", "nr", "analytic", "quadrature", "rel_error", "u2_wall0", "u2_wall1", "flux"],
              [[p["lx"], p["nu"], p["nr"], eg.analytic, eg.quadrature, eg.rel_error, *eg.wall_curvature, eg.flux]],
              cfg.hash)
    print(f"analytic 20 nu Lx / 63 = {_fmt(eg.analytic)}")
    print(f"quadrature             = {_fmt(eg.quadrature)}")
    print(f"relative error         = {_fmt(eg.rel_error)}")


def _run_report(cfg, out):
    rows = []
    for manifest in sorted(Path(cfg.output_dir).glob("*/manifest.json")):
        try:
            m = json.loads(manifest.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            rows.append([manifest.parent.name, "", "unreadable", ""])
            continue
        rows.append([manifest.parent.name, m.get("kind", ""), m.get("status", ""), m.get("hash", "")])
    write_csv(out / "report.csv", ["run", "kind", "status", "hash"], rows, cfg.hash)
    for r in rows:
        print(f"{r[2]:>8s}  {r[0]}")


RUNNERS = {
    "heat-compare": _run_heat_compare,
    "heat-sweep": _run_heat_sweep,
    "channel-run": _run_channel,
    "channel-sweep": _run_channel_sweep,
    "annulus-run": _run_annulus,
    "blprofile-run": _run_blprofile,
    "energy-growth": _run_energy_growth,
    "report": _run_report,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run one experiment; returns the exit status. The manifest is always written."""
    out = cfg.run_dir
    _write_manifest(cfg, "running")
    try:
        RUNNERS[cfg.kind](cfg, out)
    except ConfigError as exc:
        _write_manifest(cfg, "failed", f"config: {exc}")
        print(f"difffree: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        _write_manifest(cfg, "failed", f"abort: {exc}")
        print(f"difffree: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except Exception as exc:
        _write_manifest(cfg, "failed", f"{type(exc).__name__}: {exc}")
        raise
    _write_manifest(cfg, "ok")
    print(f"outputs in {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = parse_config(args)
    except ConfigError as exc:
        print(f"difffree: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg)


def entry():
    sys.exit(main())
