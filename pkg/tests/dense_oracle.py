"""Independent dense-matrix reimplementation of the pipeline for tests.

Everything here is deliberately written along a different route than the
package: shape functions on the reference triangle, numerical quadrature
(3-point edge-midpoint rule, exact for quadratics) instead of closed
forms, explicit Python loops, dense numpy solves. Only the mesh geometry,
the coefficient callables and the sampled Wiener increments are shared
with the code under test, since those are the contract.
"""

import numpy as np

# Reference triangle (0,0)-(1,0)-(0,1); N = [1 - xi - eta, xi, eta].
_REF_GRADS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_MIDPOINTS = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])


def _shape(ref_pt):
    xi, eta = ref_pt
    return np.array([1.0 - xi - eta, xi, eta])


def element_matrices(pts, D, q, delta=0.0):
    """Local mass, bilinear-form matrix, and lumped weights for one element.

    pts: (3, 2) vertex coordinates; D: 2x2 tensor; q: advection 2-vector
    or None; delta: streamline-diffusion coefficient (0 disables).
    """
    J = np.array([pts[1] - pts[0], pts[2] - pts[0]]).T  # maps ref -> physical
    detJ = np.linalg.det(J)
    area = 0.5 * detJ
    grads = np.linalg.solve(J.T, _REF_GRADS.T).T  # (3, 2) physical gradients

    m = np.zeros((3, 3))
    for ref_pt in _MIDPOINTS:
        N = _shape(ref_pt)
        m += (area / 3.0) * np.outer(N, N)

    k = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            k[i, j] = area * grads[i] @ D @ grads[j]
    if q is not None:
        qg = grads @ np.asarray(q, dtype=float)
        for ref_pt in _MIDPOINTS:
            N = _shape(ref_pt)
            for i in range(3):
                for j in range(3):
                    k[i, j] += (area / 3.0) * N[i] * qg[j]
        if delta > 0.0:
            for i in range(3):
                for j in range(3):
                    k[i, j] += delta * area * qg[i] * qg[j]
    w = np.full(3, area / 3.0)
    return m, k, w


def _edge_mass(p0, p1):
    """2-point Gauss line quadrature of alpha-free edge mass (exact deg 3)."""
    length = np.linalg.norm(p1 - p0)
    gauss = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))
    m = np.zeros((2, 2))
    for s in gauss:
        N = np.array([1.0 - s, s])
        m += 0.5 * length * np.outer(N, N)
    return m


def assemble_dense(mesh, diffusion=1.0, velocity=None, robin_alpha=0.0,
                   c0=0.0, upwind=False):
    """Dense global mass, form matrix, and lumped load weights."""
    n = mesh.n_nodes
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    W = np.zeros(n)

    D_in = np.asarray(diffusion, dtype=float)
    for e, tri in enumerate(mesh.elements):
        pts = mesh.nodes[tri]
        if D_in.ndim == 0:
            D = float(D_in) * np.eye(2)
        elif D_in.shape == (2, 2):
            D = D_in
        elif D_in.ndim == 1:
            D = D_in[e] * np.eye(2)
        else:
            D = D_in[e]
        if velocity is None:
            q = None
        else:
            qv = np.asarray(velocity, dtype=float)
            q = qv if qv.shape == (2,) else qv[e]
        delta = 0.0
        if upwind and q is not None:
            qn = np.linalg.norm(q)
            h_t = max(
                np.linalg.norm(pts[1] - pts[0]),
                np.linalg.norm(pts[2] - pts[1]),
                np.linalg.norm(pts[0] - pts[2]),
            )
            c1 = min(np.linalg.eigvalsh(D))
            if qn > 0 and qn * h_t / (2.0 * c1) > 1.0:
                delta = h_t / (2.0 * qn)
        m, k, w = element_matrices(pts, D, q, delta)
        for a in range(3):
            W[tri[a]] += w[a]
            for b in range(3):
                M[tri[a], tri[b]] += m[a, b]
                K[tri[a], tri[b]] += k[a, b]

    if robin_alpha != 0.0:
        for (n0, n1), tag in zip(mesh.boundary_edges, mesh.edge_tags):
            if tag == "robin":
                em = robin_alpha * _edge_mass(mesh.nodes[n0], mesh.nodes[n1])
                for a, ga in enumerate((n0, n1)):
                    for b, gb in enumerate((n0, n1)):
                        K[ga, gb] += em[a, b]

    K += c0 * M
    return M, K, W


def dense_projection_load(mesh, g):
    """Midpoint-rule load vector, loop-based."""
    b = np.zeros(mesh.n_nodes)
    for tri in mesh.elements:
        pts = mesh.nodes[tri]
        J = np.array([pts[1] - pts[0], pts[2] - pts[0]]).T
        area = 0.5 * np.linalg.det(J)
        for ref_pt in _MIDPOINTS:
            N = _shape(ref_pt)
            xy = N @ pts
            gval = float(np.asarray(g(np.array([xy[0]]), np.array([xy[1]]))).ravel()[0])
            b[tri] += (area / 3.0) * gval * N
    return b


def dense_project(mesh, M, g):
    return np.linalg.solve(M, dense_projection_load(mesh, g))


class DenseScheme:
    """Full dense reimplementation of the implicit Euler SPDE step."""

    def __init__(self, mesh, diffusion, velocity, drift, noise_b, noise_phi,
                 dirichlet_value, c0, upwind=False, robin_alpha=0.0):
        self.mesh = mesh
        self.M, self.K, self.W = assemble_dense(
            mesh, diffusion, velocity, robin_alpha, c0, upwind
        )
        self.c0 = c0
        self.drift = drift
        self.noise_b = noise_b
        self.noise_phi = noise_phi
        self.dir_nodes = np.flatnonzero(mesh.node_tags == "dirichlet")
        if callable(dirichlet_value):
            self.g = np.asarray(
                dirichlet_value(
                    mesh.nodes[self.dir_nodes, 0], mesh.nodes[self.dir_nodes, 1]
                ),
                dtype=float,
            ) * np.ones(self.dir_nodes.size)
        else:
            self.g = np.full(self.dir_nodes.size, float(dirichlet_value))

    def initial(self, x0):
        if callable(x0):
            X = dense_project(self.mesh, self.M, x0)
        else:
            X = np.full(self.mesh.n_nodes, float(x0))
        X[self.dir_nodes] = self.g
        return X

    def step(self, X, t, dt, dW=None):
        nodes = self.mesh.nodes
        rhs = self.M @ X
        if self.drift is not None:
            f = self.drift(nodes[:, 0], nodes[:, 1], X) + self.c0 * X
            rhs = rhs + dt * self.W * f
        if dW is not None:
            if self.noise_b is not None:
                rhs = rhs + self.W * self.noise_b(nodes[:, 0], nodes[:, 1], X) * dW
            elif self.noise_phi is not None:
                rhs = rhs + self.W * self.noise_phi(t) * dW

        S = self.M + dt * self.K
        # algebraic lifting: identity rows/cols for constrained nodes
        free = np.setdiff1d(np.arange(self.mesh.n_nodes), self.dir_nodes)
        rhs = rhs.copy()
        rhs[free] -= S[np.ix_(free, self.dir_nodes)] @ self.g
        rhs[self.dir_nodes] = self.g
        S_red = S.copy()
        S_red[self.dir_nodes, :] = 0.0
        S_red[:, self.dir_nodes] = 0.0
        S_red[self.dir_nodes, self.dir_nodes] = 1.0
        return np.linalg.solve(S_red, rhs)

    def run(self, x0, dt, nodal_increments=None, n_steps=None):
        """nodal_increments: (n_steps, n_nodes) array or None."""
        if n_steps is None:
            n_steps = len(nodal_increments)
        X = self.initial(x0)
        for m in range(n_steps):
            dW = None if nodal_increments is None else nodal_increments[m]
            X = self.step(X, m * dt, dt, dW)
        return X


def nodal_increment_loop(spec, path, mesh, m):
    """Double-loop evaluation of one increment at the mesh nodes."""
    modes = spec.modes()
    out = np.zeros(mesh.n_nodes)
    for k in range(mesh.n_nodes):
        x, y = mesh.nodes[k]
        acc = 0.0
        for idx, (i, j) in enumerate(modes):
            e1 = (
                np.sqrt(1.0 / spec.L1)
                if i == 0
                else np.sqrt(2.0 / spec.L1) * np.cos(i * np.pi * x / spec.L1)
            )
            e2 = (
                np.sqrt(1.0 / spec.L2)
                if j == 0
                else np.sqrt(2.0 / spec.L2) * np.cos(j * np.pi * y / spec.L2)
            )
            acc += e1 * e2 * path.increments[m, idx]
        out[k] = acc
    return out
