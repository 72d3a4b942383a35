"""Run configuration: flat INI-style key-value files with sections.

Unknown sections or keys are rejected, every default is materialized in
the resolved configuration, and the echo written next to each run's
results is byte-stable: parsing the echo and echoing again reproduces it
exactly. Step sizes accept fractions ("1/1024") or decimals.
"""

import configparser
import io

from . import problems
from .assembly import ProblemSpec, assemble_operators
from .convergence import ExperimentPlan
from .darcy import (
    constant_permeability,
    layered_permeability,
    lognormal_permeability,
    solve_darcy,
)
from .errors import ConfigError
from .mesh import BoundaryLayout, build_rectangle_mesh, layout_by_name
from .noise import ADDITIVE, MULTIPLICATIVE, NoiseSpec

# Section -> key -> default (all strings; order defines the echo layout).
DEFAULTS = {
    "mesh": {
        "l1": "1.0",
        "l2": "1.0",
        "nx": "32",
        "ny": "32",
        "layout": "inflow_dirichlet",
    },
    "problem": {
        "diffusion": "1e-4",
        "drift": "kink",
        "noise_b": "linear2",
        "noise_phi": "none",
        "dirichlet_value": "1.0",
        "robin_alpha": "0.0",
        "c0": "default",
        "upwind": "true",
    },
    "noise": {
        "beta": "1.0",
        "epsilon": "1e-3",
        "i_max": "8",
        "j_max": "8",
    },
    "darcy": {
        "use_velocity": "true",
        "permeability": "constant",
        "k": "0.3333333333333333",
        "k_lower": "1.0",
        "k_upper": "10.0",
        "perm_seed": "0",
        "perm_mean": "0.0",
        "perm_sigma": "1.0",
        "perm_smoothing": "3",
        "p_in": "1.0",
        "p_out": "0.0",
        "qx": "0.0",
        "qy": "0.0",
    },
    "solver": {
        "tol": "1e-10",
    },
    "experiment": {
        "t": "1.0",
        "dt_levels": "1/16,1/32,1/64,1/128",
        "dt_ref": "1/1024",
        "realizations": "20",
        "order_min": "none",
        "order_max": "none",
    },
    "heat": {
        "t": "0.05",
        "diffusion": "1.0",
        "nx_levels": "4,8,16,32",
        "spatial_steps": "4096",
        "temporal_nx": "32",
        "temporal_steps": "8,16,32,64,128",
        "reference_steps": "2048",
        "spatial_min": "1.8",
        "spatial_max": "2.2",
        "temporal_min": "0.9",
        "temporal_max": "1.1",
    },
    "run": {
        "dt": "1/64",
        "steps": "64",
        "snapshot_stride": "8",
    },
}


class RunConfig:
    """Fully resolved configuration (every key present, values as strings)."""

    def __init__(self, values):
        self.values = values

    def get(self, section, key):
        return self.values[section][key]

    def getfloat(self, section, key):
        try:
            return float(self.get(section, key))
        except ValueError:
            raise ConfigError(
                f"[{section}] {key} = {self.get(section, key)!r} is not a number"
            ) from None

    def getint(self, section, key):
        try:
            return int(self.get(section, key))
        except ValueError:
            raise ConfigError(
                f"[{section}] {key} = {self.get(section, key)!r} is not an integer"
            ) from None

    def getbool(self, section, key):
        raw = self.get(section, key).lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a boolean")

    def gettime(self, section, key):
        return parse_time(self.get(section, key), f"[{section}] {key}")

    def gettimes(self, section, key):
        raw = self.get(section, key)
        return tuple(
            parse_time(part.strip(), f"[{section}] {key}")
            for part in raw.split(",")
            if part.strip()
        )

    def getints(self, section, key):
        raw = self.get(section, key)
        try:
            return tuple(int(p.strip()) for p in raw.split(",") if p.strip())
        except ValueError:
            raise ConfigError(
                f"[{section}] {key} = {raw!r} is not an integer list"
            ) from None

    def getoptfloat(self, section, key):
        raw = self.get(section, key)
        if raw.lower() == "none":
            return None
        return self.getfloat(section, key)

    def set(self, section, key, value):
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        self.values[section][key] = str(value)


def parse_time(raw, label="value"):
    """Parse a step size: '1/1024' or a decimal literal."""
    raw = raw.strip()
    try:
        if "/" in raw:
            num, den = raw.split("/")
            return float(num) / float(den)
        return float(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{label} = {raw!r} is not a time step") from None


def parse_config(path=None, text=None):
    """Load, validate against the schema, and resolve all defaults."""
    values = {s: dict(kv) for s, kv in DEFAULTS.items()}
    if path is None and text is None:
        return RunConfig(values)

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str.lower
    try:
        if text is not None:
            parser.read_string(text)
        else:
            with open(path) as fh:
                parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc

    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown config key [{section}] {key}")
            values[section][key] = value.strip()
    return RunConfig(values)


def echo_text(cfg):
    """Canonical text of the resolved configuration (byte-stable)."""
    out = io.StringIO()
    for section, keys in DEFAULTS.items():
        out.write(f"[{section}]\n")
        for key in keys:
            out.write(f"{key} = {cfg.values[section][key]}\n")
        out.write("\n")
    return out.getvalue()


def mesh_from_config(cfg, layout=None):
    if layout is None:
        layout = layout_by_name(cfg.get("mesh", "layout"))
    return build_rectangle_mesh(
        cfg.getfloat("mesh", "l1"), cfg.getfloat("mesh", "l2"),
        cfg.getint("mesh", "nx"), cfg.getint("mesh", "ny"),
        layout,
    )


def permeability_from_config(cfg, mesh):
    kind = cfg.get("darcy", "permeability")
    if kind == "constant":
        return constant_permeability(mesh, cfg.getfloat("darcy", "k"))
    if kind == "layered":
        return layered_permeability(
            mesh, cfg.getfloat("darcy", "k_lower"), cfg.getfloat("darcy", "k_upper")
        )
    if kind == "lognormal":
        return lognormal_permeability(
            mesh,
            seed=cfg.getint("darcy", "perm_seed"),
            mean=cfg.getfloat("darcy", "perm_mean"),
            sigma=cfg.getfloat("darcy", "perm_sigma"),
            smoothing_cells=cfg.getint("darcy", "perm_smoothing"),
        )
    raise ConfigError(f"unknown permeability kind {kind!r}")


def velocity_from_config(cfg):
    """Advection field: Darcy-recovered or constant, or None if zero."""
    if cfg.getbool("darcy", "use_velocity"):
        darcy_mesh = build_rectangle_mesh(
            cfg.getfloat("mesh", "l1"), cfg.getfloat("mesh", "l2"),
            cfg.getint("mesh", "nx"), cfg.getint("mesh", "ny"),
            BoundaryLayout.pressure_drop(),
        )
        perm = permeability_from_config(cfg, darcy_mesh)
        _, vel = solve_darcy(
            darcy_mesh, perm,
            p_in=cfg.getfloat("darcy", "p_in"),
            p_out=cfg.getfloat("darcy", "p_out"),
        )
        return vel.q
    qx = cfg.getfloat("darcy", "qx")
    qy = cfg.getfloat("darcy", "qy")
    if qx == 0.0 and qy == 0.0:
        return None
    return (qx, qy)


def _lookup(table, name, label):
    try:
        return table[name]
    except KeyError:
        raise ConfigError(
            f"unknown {label} {name!r}; known: {sorted(table)}"
        ) from None


def problem_from_config(cfg, velocity=None, noise_kind=None):
    """ProblemSpec from [problem], with optional noise-kind override."""
    drift = _lookup(problems.DRIFTS, cfg.get("problem", "drift"), "drift")
    noise_b = _lookup(problems.NOISE_B, cfg.get("problem", "noise_b"), "noise_b")
    noise_phi = _lookup(
        problems.NOISE_PHI, cfg.get("problem", "noise_phi"), "noise_phi"
    )
    if noise_kind == MULTIPLICATIVE:
        noise_b = noise_b or problems.noise_b_linear
        noise_phi = None
    elif noise_kind == ADDITIVE:
        noise_phi = noise_phi or problems.noise_phi_constant
        noise_b = None
    c0_raw = cfg.get("problem", "c0")
    c0 = None if c0_raw.lower() == "default" else parse_time(c0_raw, "[problem] c0")
    return ProblemSpec(
        diffusion=cfg.getfloat("problem", "diffusion"),
        velocity=velocity,
        drift=drift,
        noise_b=noise_b,
        noise_phi=noise_phi,
        dirichlet_value=cfg.getfloat("problem", "dirichlet_value"),
        robin_alpha=cfg.getfloat("problem", "robin_alpha"),
        c0_override=c0,
        upwind=cfg.getbool("problem", "upwind"),
    )


def noise_from_config(cfg, kind):
    return NoiseSpec(
        beta=cfg.getfloat("noise", "beta"),
        epsilon=cfg.getfloat("noise", "epsilon"),
        i_max=cfg.getint("noise", "i_max"),
        j_max=cfg.getint("noise", "j_max"),
        L1=cfg.getfloat("mesh", "l1"),
        L2=cfg.getfloat("mesh", "l2"),
        kind=kind,
    )


def plan_from_config(cfg, master_seed, noise_kind):
    """Assemble the full experiment plan for cmd_converge."""
    mesh = mesh_from_config(cfg)
    velocity = velocity_from_config(cfg)
    spec = problem_from_config(cfg, velocity=velocity, noise_kind=noise_kind)
    ops = assemble_operators(mesh, spec)
    noise_spec = noise_from_config(cfg, noise_kind)
    return ExperimentPlan(
        mesh=mesh,
        ops=ops,
        spec=spec,
        noise=noise_spec,
        T=cfg.gettime("experiment", "t"),
        dt_levels=cfg.gettimes("experiment", "dt_levels"),
        dt_ref=cfg.gettime("experiment", "dt_ref"),
        n_realizations=cfg.getint("experiment", "realizations"),
        master_seed=master_seed,
        x0=0.0,
        solver_tol=cfg.getfloat("solver", "tol"),
    )
