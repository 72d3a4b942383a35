"""Deterministic heat benchmark validating assembly plus stepper.

Unit square, isotropic diffusion, homogeneous Dirichlet boundary,
X0 = sin(pi x) sin(pi y); the exact solution is exp(-2 pi^2 d t) X0.

Two observed orders are reported:
  * spatial: L2 error at time T against the exact solution over a mesh
    sweep with a time step small enough that the temporal error sits far
    below the spatial one;
  * temporal: errors on one fixed mesh against the same-mesh reference
    run, which isolates the implicit Euler rate from the spatial error.

Step counts are relative to the horizon (dt = T / steps). The default
T = 0.05 keeps 2 pi^2 T near 1: long horizons push the coarse steps into
the stiff-decay regime where the observed temporal order exceeds 1.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import ProblemSpec, assemble_operators, l2_error_vs_function, l2_norm
from .convergence import fit_order
from .mesh import BoundaryLayout, build_rectangle_mesh
from .problems import heat_initial
from .stepper import run_path


@dataclass
class HeatCheckResult:
    spatial_points: list       # (h, error)
    spatial_order: float
    spatial_stderr: float
    temporal_points: list      # (dt, error)
    temporal_order: float
    temporal_stderr: float

    def to_dict(self):
        return {
            "spatial_points": [list(p) for p in self.spatial_points],
            "spatial_order": self.spatial_order,
            "spatial_stderr": self.spatial_stderr,
            "temporal_points": [list(p) for p in self.temporal_points],
            "temporal_order": self.temporal_order,
            "temporal_stderr": self.temporal_stderr,
        }


def _heat_setup(nx, diffusion):
    mesh = build_rectangle_mesh(1.0, 1.0, nx, nx, BoundaryLayout.all_dirichlet())
    spec = ProblemSpec(diffusion=diffusion, dirichlet_value=0.0)
    return mesh, spec, assemble_operators(mesh, spec)


def run_heat_check(T=0.05, diffusion=1.0, nx_levels=(4, 8, 16, 32),
                   spatial_steps=4096, temporal_nx=32,
                   temporal_steps=(8, 16, 32, 64, 128),
                   reference_steps=2048, tol=1e-11):
    """Run both sweeps and fit the observed orders."""
    decay = np.exp(-2.0 * np.pi ** 2 * diffusion * T)

    def exact(x, y):
        return decay * heat_initial(x, y)

    spatial = []
    for nx in nx_levels:
        mesh, spec, ops = _heat_setup(nx, diffusion)
        state = run_path(
            mesh, ops, spec, dt=T / spatial_steps, n_steps=spatial_steps,
            x0=heat_initial, tol=tol,
        )
        spatial.append((mesh.h, l2_error_vs_function(mesh, state.X, exact)))
    spatial_order, spatial_stderr = fit_order(spatial)

    mesh, spec, ops = _heat_setup(temporal_nx, diffusion)
    ref = run_path(
        mesh, ops, spec, dt=T / reference_steps, n_steps=reference_steps,
        x0=heat_initial, tol=tol,
    )
    temporal = []
    for n in temporal_steps:
        state = run_path(
            mesh, ops, spec, dt=T / n, n_steps=n, x0=heat_initial, tol=tol
        )
        temporal.append((T / n, l2_norm(ops.M, state.X - ref.X)))
    temporal_order, temporal_stderr = fit_order(temporal)

    return HeatCheckResult(
        spatial_points=spatial,
        spatial_order=spatial_order,
        spatial_stderr=spatial_stderr,
        temporal_points=temporal,
        temporal_order=temporal_order,
        temporal_stderr=temporal_stderr,
    )
