"""Command line entry points binding the modules into reproducible runs.

Subcommands
-----------
heat-check   zero-noise benchmark; writes observed spatial/temporal orders
darcy        pressure and velocity of the stationary Darcy problem
converge     Monte Carlo strong-convergence experiment for one noise kind
run          single noisy path with optional field snapshots

Every run writes the fully resolved configuration (resolved_config.ini)
next to its outputs, and all outputs are plain text (CSV / JSON / node
tables). Exit codes: 0 success, 2 config error, 3 numerical failure,
4 acceptance-band violation.
"""

import argparse
import json
import sys
from pathlib import Path

from . import config as cfgmod
from .assembly import assemble_operators
from .config import echo_text, parse_config
from .convergence import run_experiment
from .darcy import solve_darcy, write_pressure, write_velocity
from .errors import (
    ConfigError,
    ExperimentFailure,
    NumericalBlowupError,
    SolverConvergenceError,
    SpdefemError,
)
from .heatcheck import run_heat_check
from .mesh import write_mesh
from .noise import ADDITIVE, MULTIPLICATIVE, sample_path
from .stepper import run_path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_BAND = 4


def _prepare_out(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.ini").write_text(echo_text(cfg))
    return out


def cmd_heat_check(args, cfg):
    out = _prepare_out(args, cfg)
    result = run_heat_check(
        T=cfg.gettime("heat", "t"),
        diffusion=cfg.getfloat("heat", "diffusion"),
        nx_levels=cfg.getints("heat", "nx_levels"),
        spatial_steps=cfg.getint("heat", "spatial_steps"),
        temporal_nx=cfg.getint("heat", "temporal_nx"),
        temporal_steps=cfg.getints("heat", "temporal_steps"),
        reference_steps=cfg.getint("heat", "reference_steps"),
    )
    (out / "heat_orders.json").write_text(
        json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    with open(out / "heat_errors.csv", "w") as fh:
        fh.write("sweep,step,error\n")
        for h, err in result.spatial_points:
            fh.write(f"spatial,{h!r},{err!r}\n")
        for dt, err in result.temporal_points:
            fh.write(f"temporal,{dt!r},{err!r}\n")

    print(f"spatial order  {result.spatial_order:.4f}")
    print(f"temporal order {result.temporal_order:.4f}")
    bands = (
        ("spatial", result.spatial_order,
         cfg.getfloat("heat", "spatial_min"), cfg.getfloat("heat", "spatial_max")),
        ("temporal", result.temporal_order,
         cfg.getfloat("heat", "temporal_min"), cfg.getfloat("heat", "temporal_max")),
    )
    for name, value, lo, hi in bands:
        if not lo <= value <= hi:
            print(f"{name} order {value:.4f} outside [{lo}, {hi}]", file=sys.stderr)
            return EXIT_BAND
    return EXIT_OK


def cmd_darcy(args, cfg):
    out = _prepare_out(args, cfg)
    mesh = cfgmod.mesh_from_config(
        cfg, layout=cfgmod.layout_by_name("pressure_drop")
    )
    perm = cfgmod.permeability_from_config(cfg, mesh)
    pressure, velocity = solve_darcy(
        mesh, perm,
        p_in=cfg.getfloat("darcy", "p_in"),
        p_out=cfg.getfloat("darcy", "p_out"),
    )
    write_mesh(mesh, out / "mesh.txt")
    write_pressure(mesh, pressure, out / "pressure.txt")
    write_velocity(mesh, velocity, out / "velocity.txt")
    print(
        f"darcy solved on {mesh.nx}x{mesh.ny}: "
        f"max |q| = {velocity.max_speed:.6g}"
    )
    return EXIT_OK


def cmd_converge(args, cfg):
    out = _prepare_out(args, cfg)
    kind = MULTIPLICATIVE if args.noise == "multiplicative" else ADDITIVE
    plan = cfgmod.plan_from_config(cfg, master_seed=args.seed, noise_kind=kind)

    def on_level(stats):
        print(
            f"dt={stats.dt:<10.6g} rms={stats.rms_error:.6g} "
            f"n={stats.n_effective} excluded={stats.n_excluded}"
        )

    report = run_experiment(plan, workers=args.workers, on_level=on_level)
    report.to_json(out / "report.json")
    report.write_csv(out / "levels.csv")
    print(f"fitted order {report.order:.4f} (stderr {report.order_stderr:.4f})")

    lo = cfg.getoptfloat("experiment", "order_min")
    hi = cfg.getoptfloat("experiment", "order_max")
    if lo is not None and report.order < lo or hi is not None and report.order > hi:
        print(f"order {report.order:.4f} outside [{lo}, {hi}]", file=sys.stderr)
        return EXIT_BAND
    return EXIT_OK


def cmd_run(args, cfg):
    out = _prepare_out(args, cfg)
    kind = MULTIPLICATIVE if args.noise == "multiplicative" else ADDITIVE
    mesh = cfgmod.mesh_from_config(cfg)
    velocity = cfgmod.velocity_from_config(cfg)
    spec = cfgmod.problem_from_config(cfg, velocity=velocity, noise_kind=kind)
    ops = assemble_operators(mesh, spec)
    noise_spec = cfgmod.noise_from_config(cfg, kind)

    steps = cfg.getint("run", "steps")
    dt = cfg.gettime("run", "dt")
    stride = cfg.getint("run", "snapshot_stride")
    family = sample_path(noise_spec, args.seed, steps, T=steps * dt)
    path = family[steps]

    write_mesh(mesh, out / "mesh.txt")
    written = []

    def on_step(state):
        if stride > 0 and state.m % stride == 0:
            fname = out / f"snapshot_{state.m:06d}.txt"
            _write_field(mesh, state.X, state.t, fname)
            written.append(fname.name)

    final = run_path(
        mesh, ops, spec, path=path, x0=0.0,
        tol=cfg.getfloat("solver", "tol"), on_step=on_step,
    )
    _write_field(mesh, final.X, final.t, out / "final_state.txt")
    print(f"ran {final.m} steps to t={final.t:.6g}; {len(written)} snapshots")
    return EXIT_OK


def _write_field(mesh, X, t, path):
    with open(path, "w") as fh:
        fh.write(f"# t {float(t)!r}\n# node x y value\n")
        for k, (x, y) in enumerate(mesh.nodes):
            fh.write(f"{k} {float(x)!r} {float(y)!r} {float(X[k])!r}\n")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spdefem",
        description="FEM + linear implicit Euler solver for parabolic SPDEs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("heat-check", cmd_heat_check),
        ("darcy", cmd_darcy),
        ("converge", cmd_converge),
        ("run", cmd_run),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI configuration file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument(
            "--noise", choices=("additive", "multiplicative"),
            default="multiplicative",
        )
        p.add_argument("--out", default="out")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        return args.handler(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverConvergenceError, NumericalBlowupError, ExperimentFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SpdefemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
