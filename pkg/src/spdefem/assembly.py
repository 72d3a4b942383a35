"""P1 finite element operators for advection-diffusion problems.

Assembles the mass matrix M, the bilinear-form matrix K (diffusion +
advection + Robin boundary term + coercivity shift c0*M), nodal load
weights, and handles nonhomogeneous Dirichlet data by algebraic lifting.

Per-element coefficients are taken constant (sampled at centroids for
callables), for which the closed-form local integrals below are exact:

    mass       A/12 * [[2,1,1],[1,2,1],[1,1,2]]
    diffusion  A * grad(phi_i) . D grad(phi_j)
    advection  A/3 * (q . grad(phi_j))        (same for each test index i)
    robin edge alpha0 * len/6 * [[2,1],[1,2]]

Loads use the 3-point nodal rule b_i = w_i * g(x_i) with w_i the lumped
weights sum_T area_T / 3, exact for piecewise-linear integrands. The shift
c0 defaults to max|q|^2 / (2 c1), which makes v'Kv >= (c1/2)|grad v|^2 by
Young's inequality; the matching c0*u term is re-added to the drift by the
stepper so the scheme is consistent with the unshifted equation.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import mesh as meshmod
from .linalg import SparseMatrix, solve_spd


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients of the advection-diffusion-reaction problem.

    Attributes
    ----------
    diffusion : float, (2, 2) array, (E,) array or (E, 2, 2) array
        Scalar means isotropic D = d*I; per-element variants give one
        value per element. Must be symmetric and uniformly elliptic.
    velocity : None, (2,) or (E, 2) array, or callable (x, y) -> (qx, qy)
        Advection field; None means no advection.
    drift : callable (x, y, u) -> array, or None
        Nonlinear reaction f(x, u), vectorized over nodes. None disables
        the nonlinear term entirely (including the shift re-addition),
        leaving the pure linear evolution.
    noise_b : callable (x, y, u) -> array, or None
        Multiplicative noise coefficient b(x, u).
    noise_phi : callable (t,) -> float, or None
        Additive noise amplitude phi(t). Mutually exclusive with noise_b.
    dirichlet_value : float or callable (x, y) -> array
        Boundary data g_D on Dirichlet-tagged nodes.
    robin_alpha : float
        Constant Robin coefficient alpha0 (>= 0).
    c0_override : float or None
        Coercivity shift; None selects default_garding_shift.
    upwind : bool
        Adds streamline diffusion delta_T (q.grad u)(q.grad v) on elements
        whose cell Peclet number |q| h_T / (2 c1_T) exceeds 1, with
        delta_T = h_T / (2 |q|).
    """

    diffusion: Union[float, np.ndarray] = 1.0
    velocity: Union[None, tuple, np.ndarray, Callable] = None
    drift: Optional[Callable] = None
    noise_b: Optional[Callable] = None
    noise_phi: Optional[Callable] = None
    dirichlet_value: Union[float, Callable] = 0.0
    robin_alpha: float = 0.0
    c0_override: Optional[float] = None
    upwind: bool = False

    def __post_init__(self):
        if self.noise_b is not None and self.noise_phi is not None:
            raise ValueError("noise_b and noise_phi are mutually exclusive")


@dataclass(frozen=True)
class OperatorSet:
    """Assembled operators plus Dirichlet bookkeeping for one mesh.

    M is the consistent mass matrix; K carries diffusion, advection,
    Robin and the c0*M shift. Dirichlet rows are recorded, not yet
    eliminated. load_weights holds w_i = integral of the hat function,
    used for nodal-quadrature loads.
    """

    M: SparseMatrix
    K: SparseMatrix
    dirichlet_nodes: np.ndarray
    dirichlet_values: np.ndarray
    free_nodes: np.ndarray
    load_weights: np.ndarray
    c0: float
    c1: float
    mesh: meshmod.Mesh

    def __post_init__(self):
        for arr in (self.dirichlet_nodes, self.dirichlet_values,
                    self.free_nodes, self.load_weights):
            arr.setflags(write=False)


def resolve_diffusion(mesh, diffusion):
    """Normalize the diffusion input to an (E, 2, 2) per-element tensor."""
    E = mesh.n_elements
    d = np.asarray(diffusion, dtype=float)
    if d.ndim == 0:
        out = np.zeros((E, 2, 2))
        out[:, 0, 0] = out[:, 1, 1] = float(d)
    elif d.shape == (2, 2):
        out = np.broadcast_to(d, (E, 2, 2)).copy()
    elif d.shape == (E,):
        out = np.zeros((E, 2, 2))
        out[:, 0, 0] = out[:, 1, 1] = d
    elif d.shape == (E, 2, 2):
        out = d.copy()
    else:
        raise ValueError(f"cannot interpret diffusion with shape {d.shape}")
    if not np.allclose(out, np.transpose(out, (0, 2, 1))):
        raise ValueError("diffusion tensor must be symmetric")
    return out


def resolve_velocity(mesh, velocity):
    """Normalize the velocity input to an (E, 2) per-element array or None."""
    if velocity is None:
        return None
    if callable(velocity):
        cent = meshmod.element_centroids(mesh)
        q = np.asarray(velocity(cent[:, 0], cent[:, 1]), dtype=float)
        if q.shape == (2,):
            q = np.broadcast_to(q, (mesh.n_elements, 2)).copy()
        elif q.shape == (2, mesh.n_elements):
            q = q.T.copy()
        if q.shape != (mesh.n_elements, 2):
            raise ValueError("velocity callable must yield per-element 2-vectors")
        return q
    q = np.asarray(velocity, dtype=float)
    if q.shape == (2,):
        return np.broadcast_to(q, (mesh.n_elements, 2)).copy()
    if q.shape == (mesh.n_elements, 2):
        return q.copy()
    raise ValueError(f"cannot interpret velocity with shape {q.shape}")


def ellipticity_constant(D):
    """Uniform ellipticity constant c1 = min over elements of min-eig(D_T)."""
    tr = D[:, 0, 0] + D[:, 1, 1]
    det = D[:, 0, 0] * D[:, 1, 1] - D[:, 0, 1] * D[:, 1, 0]
    disc = np.sqrt(np.maximum((tr / 2.0) ** 2 - det, 0.0))
    return float(np.min(tr / 2.0 - disc))


def default_garding_shift(spec, mesh=None):
    """Shift constant c0 = max_T |q_T|^2 / (2 c1).

    Young's inequality then gives a(v,v) + c0 ||v||^2 >= (c1/2) ||v||_H1^2.
    Constant coefficients need no mesh; per-element or callable fields do.
    """
    q = spec.velocity
    if q is None:
        return 0.0
    if callable(q) or (np.asarray(q).ndim > 1):
        if mesh is None:
            raise ValueError("per-element velocity needs a mesh to resolve")
        qmax = float(np.max(np.linalg.norm(resolve_velocity(mesh, q), axis=1)))
    else:
        qmax = float(np.linalg.norm(np.asarray(q, dtype=float)))
    if qmax == 0.0:
        return 0.0
    d = np.asarray(spec.diffusion, dtype=float)
    if d.ndim <= 2 and mesh is None:
        if d.ndim == 0:
            c1 = float(d)
        else:
            c1 = ellipticity_constant(d[None, :, :])
    else:
        if mesh is None:
            raise ValueError("per-element diffusion needs a mesh to resolve")
        c1 = ellipticity_constant(resolve_diffusion(mesh, d))
    if c1 <= 0.0:
        raise ValueError(f"non-elliptic diffusion (c1={c1})")
    return qmax ** 2 / (2.0 * c1)


def _element_geometry(mesh):
    """P1 gradients and areas: returns (areas, gx, gy) with g* of shape (E, 3)."""
    p = mesh.nodes[mesh.elements]
    x = p[:, :, 0]
    y = p[:, :, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    if np.any(area <= 0):
        raise ValueError("mesh contains non-counterclockwise elements")
    inv2A = 1.0 / (2.0 * area)
    return area, b * inv2A[:, None], c * inv2A[:, None]


_MASS_TEMPLATE = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_operators(mesh, spec):
    """Assemble M, K, load weights and Dirichlet data for the given problem.

    Returns an OperatorSet; Dirichlet elimination is deferred to
    apply_dirichlet so the unreduced matrices stay available.
    """
    D = resolve_diffusion(mesh, spec.diffusion)
    c1 = ellipticity_constant(D)
    if c1 <= 0.0:
        raise ValueError(f"non-elliptic diffusion tensor (c1={c1})")
    q = resolve_velocity(mesh, spec.velocity)

    area, gx, gy = _element_geometry(mesh)
    E = mesh.n_elements

    m_loc = area[:, None, None] * _MASS_TEMPLATE[None, :, :]

    # diffusion: A * grad_i . (D grad_j)
    dgx = D[:, 0, 0, None] * gx + D[:, 0, 1, None] * gy
    dgy = D[:, 1, 0, None] * gx + D[:, 1, 1, None] * gy
    k_loc = area[:, None, None] * (
        gx[:, :, None] * dgx[:, None, :] + gy[:, :, None] * dgy[:, None, :]
    )

    if q is not None:
        qg = q[:, 0, None] * gx + q[:, 1, None] * gy  # (E, 3): q . grad(phi_j)
        k_loc += ((area / 3.0)[:, None] * qg)[:, None, :]
        if spec.upwind:
            h_t = meshmod.element_edge_lengths(mesh).max(axis=1)
            qnorm = np.linalg.norm(q, axis=1)
            peclet = qnorm * h_t / (2.0 * _local_min_eig(D))
            with np.errstate(divide="ignore", invalid="ignore"):
                delta = np.where(peclet > 1.0, h_t / (2.0 * qnorm), 0.0)
            delta = np.nan_to_num(delta)  # qnorm == 0 implies peclet == 0
            k_loc += (delta * area)[:, None, None] * (
                qg[:, :, None] * qg[:, None, :]
            )

    c0 = spec.c0_override
    if c0 is None:
        c0 = default_garding_shift(spec, mesh)
    c0 = float(c0)
    if c0 != 0.0:
        k_loc = k_loc + c0 * m_loc

    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    n = mesh.n_nodes
    M = SparseMatrix.from_coo(rows, cols, m_loc.ravel(), (n, n))

    k_rows = [rows]
    k_cols = [cols]
    k_vals = [k_loc.ravel()]
    if spec.robin_alpha != 0.0:
        robin = mesh.edge_tags == meshmod.ROBIN
        if np.any(robin):
            e = mesh.boundary_edges[robin]
            lengths = np.linalg.norm(
                mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]], axis=1
            )
            loc = spec.robin_alpha / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
            k_rows.append(np.repeat(e, 2, axis=1).ravel())
            k_cols.append(np.tile(e, (1, 2)).ravel())
            k_vals.append((lengths[:, None, None] * loc[None, :, :]).ravel())
    K = SparseMatrix.from_coo(
        np.concatenate(k_rows), np.concatenate(k_cols), np.concatenate(k_vals),
        (n, n),
    )

    w = np.zeros(n)
    np.add.at(w, mesh.elements.ravel(), np.repeat(area / 3.0, 3))

    dir_nodes = mesh.dirichlet_nodes
    if callable(spec.dirichlet_value):
        g = np.asarray(
            spec.dirichlet_value(
                mesh.nodes[dir_nodes, 0], mesh.nodes[dir_nodes, 1]
            ),
            dtype=float,
        )
        g = np.broadcast_to(g, dir_nodes.shape).copy()
    else:
        g = np.full(dir_nodes.shape, float(spec.dirichlet_value))
    free = np.setdiff1d(np.arange(n), dir_nodes)

    return OperatorSet(
        M=M, K=K, dirichlet_nodes=dir_nodes, dirichlet_values=g,
        free_nodes=free, load_weights=w, c0=c0, c1=c1, mesh=mesh,
    )


def _local_min_eig(D):
    tr = D[:, 0, 0] + D[:, 1, 1]
    det = D[:, 0, 0] * D[:, 1, 1] - D[:, 0, 1] * D[:, 1, 0]
    disc = np.sqrt(np.maximum((tr / 2.0) ** 2 - det, 0.0))
    return tr / 2.0 - disc


def nodal_load(ops, values):
    """Load vector of the 3-point nodal rule: b_i = w_i * values_i."""
    return ops.load_weights * np.asarray(values, dtype=float)


def projection_load(mesh, g):
    """Load vector b_i = integral of g * phi_i by the edge-midpoint rule.

    Three points per element (weights A/3 at edge midpoints), exact for
    quadratic integrands, hence exact loads whenever g is piecewise
    linear. Array input is treated as a P1 field, for which the exact
    loads are simply M @ g.
    """
    if not callable(g):
        raise TypeError("projection_load expects a callable; use M @ g for fields")
    area, _, _ = _element_geometry(mesh)
    p = mesh.nodes[mesh.elements]  # (E, 3, 2)
    b = np.zeros(mesh.n_nodes)
    for a, c in ((0, 1), (1, 2), (2, 0)):
        mid = 0.5 * (p[:, a, :] + p[:, c, :])
        contrib = (area / 6.0) * np.asarray(g(mid[:, 0], mid[:, 1]), dtype=float)
        np.add.at(b, mesh.elements[:, a], contrib)
        np.add.at(b, mesh.elements[:, c], contrib)
    return b


def project_l2(mesh, M, g, tol=1e-12):
    """L2 projection onto the P1 space: solve M u = b.

    Loads come from the 3-point edge-midpoint rule (projection_load),
    so the projection reproduces piecewise-linear g exactly up to solver
    tolerance. g may be a callable (x, y) -> values or a per-node array
    (interpreted as a P1 field, projected exactly).
    """
    if callable(g):
        b = projection_load(mesh, g)
    else:
        vals = np.asarray(g, dtype=float)
        if vals.ndim == 0:
            vals = np.full(mesh.n_nodes, float(vals))
        b = M @ vals
    return solve_spd(M, b, tol=tol)


def l2_norm(M, u):
    """Discrete L2 norm sqrt(u' M u)."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(np.maximum(u @ (M @ u), 0.0)))


# Degree-4 rule on the reference triangle: two orbits of 3 points each.
_Q4_POINTS = np.vstack(
    [
        np.roll([1 - 2 * a, a, a], shift)
        for a in (0.445948490915965, 0.091576213509771)
        for shift in range(3)
    ]
)
_Q4_WEIGHTS = np.repeat([0.223381589678011, 0.109951743655322], 3)


def l2_error_vs_function(mesh, u, exact):
    """Continuous L2 distance between a P1 field and a smooth function.

    Uses a degree-4 quadrature rule per element, accurate enough to
    resolve O(h^2) errors cleanly. exact is a vectorized callable
    (x, y) -> values.
    """
    area, _, _ = _element_geometry(mesh)
    p = mesh.nodes[mesh.elements]          # (E, 3, 2)
    u_el = np.asarray(u, dtype=float)[mesh.elements]  # (E, 3)
    total = 0.0
    for lam, w in zip(_Q4_POINTS, _Q4_WEIGHTS):
        xq = np.einsum("k,ekd->ed", lam, p)
        uq = u_el @ lam
        diff = uq - exact(xq[:, 0], xq[:, 1])
        total += w * float(area @ (diff * diff))
    return float(np.sqrt(total))


def apply_dirichlet(ops, S, rhs):
    """Reduce a system for the Dirichlet data recorded in ops.

    Constrained rows become identity rows with rhs = g_D; couplings of
    free rows to constrained nodes move to the right-hand side. The
    solution of the reduced system matches the constrained values exactly.

    Returns (S_reduced, rhs_reduced) without mutating the inputs.
    """
    dir_nodes = ops.dirichlet_nodes
    n = S.n_rows
    rhs_red = np.array(rhs, dtype=float, copy=True)
    if dir_nodes.size == 0:
        return S, rhs_red

    g = ops.dirichlet_values
    is_dir = np.zeros(n, dtype=bool)
    is_dir[dir_nodes] = True

    g_full = np.zeros(n)
    g_full[dir_nodes] = g
    rhs_red -= S @ g_full
    rhs_red[dir_nodes] = g

    coo = S.csr.tocoo()
    keep = ~(is_dir[coo.row] | is_dir[coo.col])
    rows = np.concatenate([coo.row[keep], dir_nodes])
    cols = np.concatenate([coo.col[keep], dir_nodes])
    vals = np.concatenate([coo.data[keep], np.ones(dir_nodes.size)])
    return SparseMatrix.from_coo(rows, cols, vals, (n, n)), rhs_red


class DirichletSystem:
    """Prepared elimination of one system matrix, reused across time steps.

    Splits S into the free-node block and the coupling to constrained
    nodes once; reduce_rhs then costs one sparse product per step.
    """

    def __init__(self, ops, S):
        self.ops = ops
        self.free = ops.free_nodes
        self.dir_nodes = ops.dirichlet_nodes
        self.g = ops.dirichlet_values
        if self.dir_nodes.size:
            self.S_ff = S.submatrix(self.free, self.free)
            coupling = S.csr[np.ix_(self.free, self.dir_nodes)]
            self.lift = coupling @ self.g
        else:
            self.S_ff = S
            self.lift = np.zeros(S.n_rows)

    def reduce_rhs(self, rhs):
        """Right-hand side restricted to free nodes, boundary data lifted."""
        return rhs[self.free] - self.lift

    def expand(self, x_free):
        """Full-size vector with exact boundary values."""
        out = np.empty(self.ops.mesh.n_nodes)
        out[self.free] = x_free
        out[self.dir_nodes] = self.g
        return out
