"""Named coefficient functions for the benchmark problems.

Module-level functions (not lambdas) so experiment plans stay picklable
for process-based workers, and so config files can reference them by
name. All node-wise callables are numpy-vectorized.
"""

import numpy as np


def drift_kink(x, y, u):
    """Lipschitz drift -|u - 1/2|, not differentiable at u = 1/2."""
    return -np.abs(u - 0.5)


def drift_zero(x, y, u):
    return np.zeros_like(u)


def noise_b_linear(x, y, u):
    """Multiplicative coefficient b(u) = 2u."""
    return 2.0 * u


def noise_b_constant(x, y, u):
    """State-independent multiplicative coefficient b = 2 (for the
    additive/multiplicative consistency check)."""
    return np.full_like(u, 2.0)


def noise_phi_constant(t):
    """Additive amplitude phi(t) = 2."""
    return 2.0


def boundary_one(x, y):
    return np.ones_like(x)


def heat_initial(x, y):
    """sin(pi x) sin(pi y), the unit-square heat benchmark initial state."""
    return np.sin(np.pi * x) * np.sin(np.pi * y)


DRIFTS = {
    "kink": drift_kink,
    "zero": drift_zero,
    "none": None,
}

NOISE_B = {
    "linear2": noise_b_linear,
    "constant2": noise_b_constant,
    "none": None,
}

NOISE_PHI = {
    "constant2": noise_phi_constant,
    "none": None,
}
