"""Linear implicit Euler time stepping for the fully discrete scheme.

One step solves

    (M + dt K) X_{m+1} = M X_m + dt b_F(X_m) + b_W(X_m, dW_m)

where b_F is the nodal-quadrature load of the shifted drift
f(x, u) + c0 u (the c0 term undoes the coercivity shift carried by K) and
b_W is the load of b(x, X_m) * dW_m for multiplicative noise or
phi(t_m) * dW_m for additive noise. The operator inverse is realized as a
linear solve on the free nodes; Dirichlet nodes are assigned their data
exactly after every step. Setting spec.drift to None disables the
nonlinear term altogether (no shift re-addition), which reduces the
iteration to powers of the resolvent (M + dt K)^{-1} M.

A single path is sequential in m; distinct realizations share the mesh
and OperatorSet read-only and can run in parallel.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import DirichletSystem, project_l2
from .errors import NumericalBlowupError
from .linalg import solve_nonsymmetric
from .noise import node_basis

DEFAULT_SOLVER_TOL = 1e-10


@dataclass(frozen=True)
class SchemeState:
    """Discrete state after m steps of size dt (t = m * dt)."""

    m: int
    t: float
    dt: float
    X: np.ndarray

    def __post_init__(self):
        self.X.setflags(write=False)


class ImplicitSystem:
    """Prepared per-step solve for a fixed (OperatorSet, dt) pair.

    Builds M + dt*K once, eliminates Dirichlet couplings once, and keeps
    the solver tolerance; step() then costs one matvec, the load
    evaluations and one Krylov solve.
    """

    def __init__(self, ops, dt, tol=DEFAULT_SOLVER_TOL):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.ops = ops
        self.dt = float(dt)
        self.tol = float(tol)
        self.system = DirichletSystem(ops, ops.M + self.dt * ops.K)

    def solve(self, rhs):
        x_free = solve_nonsymmetric(
            self.system.S_ff, self.system.reduce_rhs(rhs), tol=self.tol
        )
        return self.system.expand(x_free)


def prepare_system(ops, dt, tol=DEFAULT_SOLVER_TOL):
    return ImplicitSystem(ops, dt, tol=tol)


def initial_state(mesh, ops, x0, dt=0.0, tol=DEFAULT_SOLVER_TOL):
    """Project the initial data onto the P1 space, Dirichlet data enforced.

    x0 may be a callable (x, y) -> values, a per-node array, or a scalar.
    """
    if callable(x0) or np.ndim(x0) > 0:
        X = project_l2(mesh, ops.M, x0, tol=tol)
    else:
        X = np.full(mesh.n_nodes, float(x0))
    X[ops.dirichlet_nodes] = ops.dirichlet_values
    return SchemeState(m=0, t=0.0, dt=float(dt), X=X)


def step(state, ops, spec, dW=None, system=None):
    """Advance one step; dW is the nodal increment field for step m.

    Raises NumericalBlowupError (carrying the step index) if the solve
    produces nonfinite values.
    """
    if system is None:
        system = ImplicitSystem(ops, state.dt)
    dt = system.dt
    X = state.X
    rhs = ops.M @ X

    nodes = ops.mesh.nodes
    if spec.drift is not None:
        fvals = spec.drift(nodes[:, 0], nodes[:, 1], X) + ops.c0 * X
        rhs = rhs + dt * ops.load_weights * fvals
    if dW is not None:
        if spec.noise_b is not None:
            rhs = rhs + ops.load_weights * spec.noise_b(nodes[:, 0], nodes[:, 1], X) * dW
        elif spec.noise_phi is not None:
            rhs = rhs + ops.load_weights * spec.noise_phi(state.t) * dW

    if not np.all(np.isfinite(rhs)):
        raise NumericalBlowupError(
            f"nonfinite load at step {state.m + 1}", step=state.m + 1
        )
    X_new = system.solve(rhs)
    if not np.all(np.isfinite(X_new)):
        raise NumericalBlowupError(
            f"nonfinite state after step {state.m + 1}", step=state.m + 1
        )
    return SchemeState(m=state.m + 1, t=(state.m + 1) * dt, dt=dt, X=X_new)


def run_path(mesh, ops, spec, path=None, n_steps=None, dt=None, x0=0.0,
             basis=None, tol=DEFAULT_SOLVER_TOL, on_step=None):
    """Fold the scheme from the projected initial state to the final time.

    With a WienerPath, dt and the nodal increments come from the path
    (n_steps defaults to the full path). Without one, dt and n_steps must
    be given and the run is deterministic (no noise loads).

    on_step, if given, is called as on_step(state) after the initial
    projection and after every step (snapshot hook).
    """
    if path is not None:
        if n_steps is None:
            n_steps = path.n_steps
        if n_steps > path.n_steps:
            raise ValueError(
                f"path holds {path.n_steps} increments, need {n_steps}"
            )
        dt = path.dt
        basis_cols = basis if basis is not None else node_basis(path.spec, mesh)
        nodal_incr = path.increments[:n_steps] @ basis_cols.T
    else:
        if dt is None or n_steps is None:
            raise ValueError("deterministic runs need dt and n_steps")
        nodal_incr = None

    state = initial_state(mesh, ops, x0, dt=dt, tol=tol)
    if on_step is not None:
        on_step(state)
    if n_steps == 0:
        return state

    system = ImplicitSystem(ops, dt, tol=tol)
    for m in range(n_steps):
        dW = nodal_incr[m] if nodal_incr is not None else None
        state = step(state, ops, spec, dW=dW, system=system)
        if on_step is not None:
            on_step(state)
    return state
