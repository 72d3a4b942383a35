"""Monte Carlo strong-error estimation and convergence-order fitting.

Each realization draws one refinement-coupled Wiener path family: the
reference run (finest dt) and every coarse run share the identical
Brownian path by construction, so per-realization differences measure the
temporal discretization error only (the mesh is fixed across the sweep).
Errors are root-mean-square discrete L2 norms at the final time,

    rms(dt) = sqrt( mean_r || X_ref,r(T) - X_dt,r(T) ||_M^2 ),

and the order is the least-squares slope of log(rms) against log(dt).
Realizations that blow up are excluded and counted; more than 10%
exclusions at any level fails the experiment.
"""

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import l2_norm
from .errors import ExperimentFailure, NumericalBlowupError
from .noise import node_basis, realization_seed, sample_path
from .stepper import run_path

_VERSION = "0.1.0"


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce one convergence experiment.

    dt_levels are the coarse step sizes under test; dt_ref is the
    reference step. T / dt must be an integer at every level and each
    level must refine to dt_ref by a power of two.
    """

    mesh: object
    ops: object
    spec: object
    noise: object
    T: float
    dt_levels: tuple
    dt_ref: float
    n_realizations: int
    master_seed: int
    x0: object = 0.0
    solver_tol: float = 1e-10

    def __post_init__(self):
        if self.n_realizations < 2:
            raise ValueError("need at least 2 realizations")
        for dt in tuple(self.dt_levels) + (self.dt_ref,):
            steps = self.T / dt
            if abs(steps - round(steps)) > 1e-9:
                raise ValueError(f"T={self.T} is not a multiple of dt={dt}")
        m_ref = self.steps_ref
        for s in self.level_steps:
            ratio = m_ref / s
            if abs(ratio - round(ratio)) > 1e-9 or (
                int(round(ratio)) & (int(round(ratio)) - 1)
            ):
                raise ValueError(
                    f"dt level with {s} steps is not a dyadic coarsening "
                    f"of the reference ({m_ref} steps)"
                )

    @property
    def steps_ref(self):
        return int(round(self.T / self.dt_ref))

    @property
    def level_steps(self):
        return tuple(int(round(self.T / dt)) for dt in self.dt_levels)


@dataclass
class LevelStats:
    dt: float
    rms_error: float
    sq_error_std: float
    n_effective: int
    n_excluded: int


@dataclass
class ConvergenceReport:
    levels: list
    order: float
    order_stderr: float
    monotone_inversions: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "levels": [
                {
                    "dt": s.dt,
                    "rms_error": s.rms_error,
                    "sq_error_std": s.sq_error_std,
                    "n_effective": s.n_effective,
                    "n_excluded": s.n_excluded,
                }
                for s in self.levels
            ],
            "order": self.order,
            "order_stderr": self.order_stderr,
            "monotone_inversions": self.monotone_inversions,
            "metadata": self.metadata,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("dt,rms_error,n_effective\n")
            for s in self.levels:
                fh.write(f"{s.dt!r},{s.rms_error!r},{s.n_effective}\n")


def realization_errors(plan, realization, levels=None, basis=None):
    """Squared L2 errors of one realization at the requested levels.

    Runs the reference path once and every coarse level against it on
    the shared increments. Returns {steps: squared_error}; a level that
    blows up maps to None, and a reference blow-up raises.
    """
    if levels is None:
        levels = plan.level_steps
    seed = realization_seed(plan.master_seed, realization)
    family = sample_path(
        plan.noise, seed, plan.steps_ref, coarse_steps=levels, T=plan.T
    )
    if basis is None:
        basis = node_basis(plan.noise, plan.mesh)

    ref = run_path(
        plan.mesh, plan.ops, plan.spec, path=family[plan.steps_ref],
        x0=plan.x0, basis=basis, tol=plan.solver_tol,
    )
    out = {}
    for steps in levels:
        if steps == plan.steps_ref:
            out[steps] = 0.0
            continue
        try:
            state = run_path(
                plan.mesh, plan.ops, plan.spec, path=family[steps],
                x0=plan.x0, basis=basis, tol=plan.solver_tol,
            )
        except NumericalBlowupError:
            out[steps] = None
            continue
        out[steps] = l2_norm(plan.ops.M, ref.X - state.X) ** 2
    return out


def strong_error(plan, dt, workers=1):
    """RMS error and per-realization errors at one step size.

    Returns (rms, errors) where errors has one entry per surviving
    realization (L2 norms, not squared).
    """
    steps = int(round(plan.T / dt))
    if steps not in plan.level_steps and steps != plan.steps_ref:
        raise ValueError(f"dt={dt} is not a level of this plan")
    rows = _collect(plan, workers, levels=(steps,))
    sq = np.array(
        [r[steps] for r in rows if r is not None and r[steps] is not None]
    )
    _check_exclusions(plan, len(sq))
    return float(np.sqrt(sq.mean())), np.sqrt(sq)


def _collect(plan, workers, levels=None):
    """Per-realization error dicts in realization order (None = excluded)."""
    jobs = [(plan, r, levels) for r in range(plan.n_realizations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker_entry, jobs))
    else:
        results = [_worker_entry(job) for job in jobs]
    results.sort(key=lambda pair: pair[0])
    return [errs for _, errs in results]


def _worker_entry(args):
    plan, realization, levels = args
    try:
        return realization, realization_errors(plan, realization, levels=levels)
    except NumericalBlowupError:
        return realization, None


def _check_exclusions(plan, n_effective):
    n_excluded = plan.n_realizations - n_effective
    if n_excluded > 0.1 * plan.n_realizations:
        raise ExperimentFailure(
            f"{n_excluded}/{plan.n_realizations} realizations excluded "
            "(blow-ups exceed the 10% policy)"
        )


def fit_order(points):
    """Least-squares slope of log(err) vs log(dt) with its standard error.

    points is a sequence of (dt, err) pairs, at least 3, all errors
    positive.
    """
    pts = [(float(dt), float(err)) for dt, err in points]
    if len(pts) < 3:
        raise ValueError("order fit needs at least 3 points")
    if any(err <= 0 for _, err in pts):
        raise ValueError("order fit needs positive errors")
    x = np.log([dt for dt, _ in pts])
    y = np.log([err for _, err in pts])
    n = len(pts)
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ y) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    if n > 2:
        stderr = float(np.sqrt((resid @ resid) / (n - 2) / sxx))
    else:
        stderr = 0.0
    return slope, stderr


def run_experiment(plan, workers=1, on_level=None):
    """Full sweep: per-level RMS errors, fitted order, report.

    Aggregation order is fixed (realization index), so identical plans
    and seeds produce identical reports up to timestamps.
    """
    t0 = time.time()
    rows = _collect(plan, workers)
    level_stats = []
    for dt, steps in zip(plan.dt_levels, plan.level_steps):
        sq = [
            r[steps]
            for r in rows
            if r is not None and r.get(steps) is not None
        ]
        sq = np.array(sq, dtype=float)
        _check_exclusions(plan, sq.size)
        stats = LevelStats(
            dt=float(dt),
            rms_error=float(np.sqrt(sq.mean())),
            sq_error_std=float(sq.std(ddof=1)) if sq.size > 1 else 0.0,
            n_effective=int(sq.size),
            n_excluded=int(plan.n_realizations - sq.size),
        )
        level_stats.append(stats)
        if on_level is not None:
            on_level(stats)

    level_stats.sort(key=lambda s: s.dt)
    order, stderr = fit_order([(s.dt, s.rms_error) for s in level_stats])

    inversions = sum(
        1
        for a, b in zip(level_stats, level_stats[1:])
        if b.rms_error < a.rms_error  # larger dt should not have smaller error
    )
    report = ConvergenceReport(
        levels=level_stats,
        order=order,
        order_stderr=stderr,
        monotone_inversions=inversions,
        metadata={
            "master_seed": plan.master_seed,
            "n_realizations": plan.n_realizations,
            "dt_ref": plan.dt_ref,
            "T": plan.T,
            "noise_kind": plan.noise.kind,
            "wall_time_s": round(time.time() - t0, 3),
            "version": _VERSION,
        },
    )
    if inversions > 1:
        report.metadata["rate_warning"] = (
            "rms errors are not monotone in dt at more than one level"
        )
    return report
