"""P1 finite elements and linear implicit Euler for semilinear parabolic
SPDEs with Q-Wiener noise on 2D rectangles, plus a Darcy velocity solver
and a Monte Carlo strong-convergence harness."""

__version__ = "0.1.0"

from .assembly import (
    OperatorSet,
    ProblemSpec,
    apply_dirichlet,
    assemble_operators,
    default_garding_shift,
    l2_norm,
    project_l2,
)
from .convergence import ConvergenceReport, ExperimentPlan, fit_order, run_experiment
from .darcy import PermeabilityField, VelocityField, solve_darcy
from .errors import (
    ConfigError,
    ExperimentFailure,
    NumericalBlowupError,
    SolverConvergenceError,
    SpdefemError,
)
from .linalg import SparseMatrix, solve_nonsymmetric, solve_spd, spmv
from .mesh import BoundaryLayout, Mesh, build_rectangle_mesh, mesh_h
from .noise import NoiseSpec, WienerPath, eigenfunction, eigenvalue, sample_path
from .stepper import SchemeState, initial_state, run_path, step

__all__ = [
    "BoundaryLayout",
    "ConfigError",
    "ConvergenceReport",
    "ExperimentFailure",
    "ExperimentPlan",
    "Mesh",
    "NoiseSpec",
    "NumericalBlowupError",
    "OperatorSet",
    "PermeabilityField",
    "ProblemSpec",
    "SchemeState",
    "SolverConvergenceError",
    "SparseMatrix",
    "SpdefemError",
    "VelocityField",
    "WienerPath",
    "apply_dirichlet",
    "assemble_operators",
    "build_rectangle_mesh",
    "default_garding_shift",
    "eigenfunction",
    "eigenvalue",
    "fit_order",
    "initial_state",
    "l2_norm",
    "mesh_h",
    "project_l2",
    "run_experiment",
    "run_path",
    "sample_path",
    "solve_darcy",
    "solve_nonsymmetric",
    "solve_spd",
    "spmv",
    "step",
]
