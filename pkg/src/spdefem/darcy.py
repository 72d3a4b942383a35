"""Steady Darcy flow: pressure solve and per-element velocity recovery.

Solves -div(k grad p) = 0 with a pressure drop p_in -> p_out between the
x=0 and x=L1 sides (Dirichlet) and no-flow Neumann conditions on the y
sides, then recovers the advection field q_T = -k_T grad(p)|_T from the
exact P1 gradient on each element. The permeability is scalar per element.

The resulting VelocityField plugs into ProblemSpec.velocity for the
transport problem; element indexing matches any mesh built with the same
(L1, L2, nx, ny) regardless of its boundary layout.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import mesh as meshmod
from .assembly import (
    DirichletSystem,
    ProblemSpec,
    _element_geometry,
    assemble_operators,
)
from .linalg import solve_spd


@dataclass(frozen=True)
class PermeabilityField:
    """Per-element scalar permeability k_T > 0."""

    kind: str
    values: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.values.setflags(write=False)
        if np.any(self.values <= 0):
            raise ValueError("permeability must be strictly positive")


def constant_permeability(mesh, k=1.0):
    if k <= 0:
        raise ValueError("permeability must be strictly positive")
    return PermeabilityField("constant", np.full(mesh.n_elements, float(k)))


def layered_permeability(mesh, k_lower=1.0, k_upper=10.0, y_split=None):
    """Two horizontal layers split at y_split (default mid-height)."""
    if y_split is None:
        y_split = mesh.L2 / 2.0
    cy = meshmod.element_centroids(mesh)[:, 1]
    vals = np.where(cy < y_split, float(k_lower), float(k_upper))
    return PermeabilityField("layered", vals)


def lognormal_permeability(mesh, seed=0, mean=0.0, sigma=1.0, smoothing_cells=3):
    """Box-smoothed exponentiated Gaussian field, one value per cell.

    White noise is drawn per rectangular cell, smoothed with a uniform
    box filter of the given width (reflective edges), renormalized to
    unit variance, and exponentiated: k = exp(mean + sigma * z).
    """
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    z = gen.standard_normal((mesh.ny, mesh.nx))
    if smoothing_cells > 1:
        z = ndimage.uniform_filter(z, size=smoothing_cells, mode="reflect")
        sd = z.std()
        if sd > 0:
            z = z / sd
    vals = np.exp(mean + sigma * np.repeat(z.ravel(), 2))
    return PermeabilityField("smoothed-lognormal", vals, seed=seed)


@dataclass(frozen=True)
class VelocityField:
    """Piecewise-constant Darcy velocity, one 2-vector per element."""

    q: np.ndarray

    def __post_init__(self):
        self.q.setflags(write=False)

    @property
    def max_speed(self):
        return float(np.linalg.norm(self.q, axis=1).max())


def solve_darcy(mesh, perm, p_in=1.0, p_out=0.0, tol=1e-12):
    """Pressure and velocity of the stationary Darcy problem.

    The mesh must carry Dirichlet tags on both x-sides and Neumann tags
    on both y-sides (BoundaryLayout.pressure_drop).

    Returns
    -------
    (pressure, velocity) : (n_nodes,) array and VelocityField
    """
    x_dir = mesh.nodes[mesh.dirichlet_nodes, 0]
    if mesh.dirichlet_nodes.size == 0 or not (
        np.any(np.isclose(x_dir, 0.0)) and np.any(np.isclose(x_dir, mesh.L1))
    ):
        raise ValueError(
            "darcy mesh needs Dirichlet tags on the x=0 and x=L1 sides"
        )

    def boundary_pressure(x, y):
        return np.where(np.isclose(x, 0.0), float(p_in), float(p_out))

    spec = ProblemSpec(
        diffusion=perm.values, velocity=None, dirichlet_value=boundary_pressure,
    )
    ops = assemble_operators(mesh, spec)
    system = DirichletSystem(ops, ops.K)
    rhs = system.reduce_rhs(np.zeros(mesh.n_nodes))
    p_free = solve_spd(system.S_ff, rhs, tol=tol)
    pressure = system.expand(p_free)

    _, gx, gy = _element_geometry(mesh)
    p_el = pressure[mesh.elements]  # (E, 3)
    grad = np.column_stack([(p_el * gx).sum(axis=1), (p_el * gy).sum(axis=1)])
    return pressure, VelocityField(-perm.values[:, None] * grad)


def write_pressure(mesh, pressure, path):
    """Node table: index, x, y, pressure."""
    with open(path, "w") as fh:
        fh.write("# node x y p\n")
        for k, (x, y) in enumerate(mesh.nodes):
            fh.write(f"{k} {float(x)!r} {float(y)!r} {float(pressure[k])!r}\n")


def write_velocity(mesh, velocity, path):
    """Element table: index, centroid x, centroid y, qx, qy."""
    cent = meshmod.element_centroids(mesh)
    with open(path, "w") as fh:
        fh.write("# element cx cy qx qy\n")
        for k in range(mesh.n_elements):
            fh.write(
                f"{k} {float(cent[k, 0])!r} {float(cent[k, 1])!r} "
                f"{float(velocity.q[k, 0])!r} {float(velocity.q[k, 1])!r}\n"
            )
