"""Structured triangular meshes of a rectangle with boundary tagging.

The domain [0, L1] x [0, L2] is subdivided into nx * ny rectangular cells,
each split into two triangles along the lower-left to upper-right diagonal
(fixed for reproducibility). Node k sits at (i * L1/nx, j * L2/ny) with
k = j * (nx + 1) + i. Elements are counterclockwise.

Boundary conditions are declared per rectangle side and recorded both on
nodes (sufficient for P1 Dirichlet elimination) and on boundary edges (for
Robin line integrals). At corners shared by sides with different
conditions the precedence is dirichlet > robin > neumann.
"""

from dataclasses import dataclass, field

import numpy as np

INTERIOR = "interior"
DIRICHLET = "dirichlet"
NEUMANN = "neumann"
ROBIN = "robin"

_VALID_BC = (DIRICHLET, NEUMANN, ROBIN)
# Sides applied in increasing precedence; later assignments win at corners.
_BC_PRECEDENCE = {NEUMANN: 0, ROBIN: 1, DIRICHLET: 2}


@dataclass(frozen=True)
class BoundaryLayout:
    """One boundary condition per rectangle side."""

    left: str = DIRICHLET
    right: str = DIRICHLET
    bottom: str = DIRICHLET
    top: str = DIRICHLET

    def __post_init__(self):
        for side in (self.left, self.right, self.bottom, self.top):
            if side not in _VALID_BC:
                raise ValueError(f"unknown boundary condition {side!r}")

    @classmethod
    def all_dirichlet(cls):
        return cls()

    @classmethod
    def all_neumann(cls):
        return cls(NEUMANN, NEUMANN, NEUMANN, NEUMANN)

    @classmethod
    def inflow_dirichlet(cls):
        """Dirichlet on x=0 only, homogeneous Neumann elsewhere."""
        return cls(left=DIRICHLET, right=NEUMANN, bottom=NEUMANN, top=NEUMANN)

    @classmethod
    def pressure_drop(cls):
        """Dirichlet on x=0 and x=L1, Neumann on the y sides (Darcy setup)."""
        return cls(left=DIRICHLET, right=DIRICHLET, bottom=NEUMANN, top=NEUMANN)


_LAYOUTS = {
    "all_dirichlet": BoundaryLayout.all_dirichlet,
    "all_neumann": BoundaryLayout.all_neumann,
    "inflow_dirichlet": BoundaryLayout.inflow_dirichlet,
    "pressure_drop": BoundaryLayout.pressure_drop,
}


def layout_by_name(name):
    """Look up one of the named boundary layouts used by config files."""
    try:
        return _LAYOUTS[name]()
    except KeyError:
        raise ValueError(
            f"unknown boundary layout {name!r}; known: {sorted(_LAYOUTS)}"
        ) from None


@dataclass(frozen=True)
class Mesh:
    """Immutable structured triangulation of [0, L1] x [0, L2].

    Attributes
    ----------
    nodes : (n_nodes, 2) float array
    elements : (n_elements, 3) int array, counterclockwise vertex indices
    node_tags : (n_nodes,) str array with values interior/dirichlet/neumann/robin
    boundary_edges : (n_boundary_edges, 2) int array of node pairs
    edge_tags : (n_boundary_edges,) str array
    """

    L1: float
    L2: float
    nx: int
    ny: int
    nodes: np.ndarray
    elements: np.ndarray
    node_tags: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    h: float = field(default=0.0)

    def __post_init__(self):
        for arr in (self.nodes, self.elements, self.node_tags,
                    self.boundary_edges, self.edge_tags):
            arr.setflags(write=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    def nodes_with_tag(self, tag):
        """Indices of nodes carrying the given tag."""
        return np.flatnonzero(self.node_tags == tag)

    @property
    def dirichlet_nodes(self):
        return self.nodes_with_tag(DIRICHLET)


def build_rectangle_mesh(L1, L2, nx, ny, bc_layout=None):
    """Build the structured triangulation with boundary tagging.

    Parameters
    ----------
    L1, L2 : float
        Side lengths, must be positive.
    nx, ny : int
        Cells per axis, at least 1.
    bc_layout : BoundaryLayout, optional
        Defaults to all-Dirichlet.
    """
    if L1 <= 0 or L2 <= 0:
        raise ValueError(f"domain sides must be positive, got {L1} x {L2}")
    if nx < 1 or ny < 1:
        raise ValueError(f"subdivision counts must be >= 1, got {nx} x {ny}")
    if bc_layout is None:
        bc_layout = BoundaryLayout.all_dirichlet()

    xs = np.linspace(0.0, L1, nx + 1)
    ys = np.linspace(0.0, L2, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row j = constant y
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (nx + 1) + i

    elements = np.empty((2 * nx * ny, 3), dtype=np.int64)
    k = 0
    for j in range(ny):
        for i in range(nx):
            a = idx(i, j)
            b = idx(i + 1, j)
            c = idx(i + 1, j + 1)
            d = idx(i, j + 1)
            elements[k] = (a, b, c)      # lower-right triangle
            elements[k + 1] = (a, c, d)  # upper-left triangle
            k += 2

    node_tags = np.full(nodes.shape[0], INTERIOR, dtype="U9")
    sides = {
        "bottom": (bc_layout.bottom, [idx(i, 0) for i in range(nx + 1)]),
        "top": (bc_layout.top, [idx(i, ny) for i in range(nx + 1)]),
        "left": (bc_layout.left, [idx(0, j) for j in range(ny + 1)]),
        "right": (bc_layout.right, [idx(nx, j) for j in range(ny + 1)]),
    }
    for _, (bc, node_list) in sorted(
        sides.items(), key=lambda kv: _BC_PRECEDENCE[kv[1][0]]
    ):
        node_tags[node_list] = bc

    edges = []
    edge_tags = []
    for i in range(nx):
        edges.append((idx(i, 0), idx(i + 1, 0)))
        edge_tags.append(bc_layout.bottom)
        edges.append((idx(i, ny), idx(i + 1, ny)))
        edge_tags.append(bc_layout.top)
    for j in range(ny):
        edges.append((idx(0, j), idx(0, j + 1)))
        edge_tags.append(bc_layout.left)
        edges.append((idx(nx, j), idx(nx, j + 1)))
        edge_tags.append(bc_layout.right)

    mesh = Mesh(
        L1=float(L1), L2=float(L2), nx=int(nx), ny=int(ny),
        nodes=nodes, elements=elements, node_tags=node_tags,
        boundary_edges=np.asarray(edges, dtype=np.int64),
        edge_tags=np.asarray(edge_tags, dtype="U9"),
    )
    object.__setattr__(mesh, "h", mesh_h(mesh))
    return mesh


def signed_areas(mesh):
    """Signed area of every element (positive for counterclockwise)."""
    p = mesh.nodes[mesh.elements]  # (E, 3, 2)
    return 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )


def element_edge_lengths(mesh):
    """(E, 3) array of edge lengths per element."""
    p = mesh.nodes[mesh.elements]
    out = np.empty((mesh.n_elements, 3))
    for k, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        out[:, k] = np.hypot(
            p[:, b, 0] - p[:, a, 0], p[:, b, 1] - p[:, a, 1]
        )
    return out


def mesh_h(mesh):
    """Maximal edge length over all elements."""
    return float(element_edge_lengths(mesh).max())


def element_centroids(mesh):
    """(E, 2) array of element centroids."""
    return mesh.nodes[mesh.elements].mean(axis=1)


def write_mesh(mesh, path):
    """Plain-text dump: node records (index, x, y, tag), then elements."""
    with open(path, "w") as fh:
        fh.write(f"# nodes {mesh.n_nodes}\n")
        for k, (x, y) in enumerate(mesh.nodes):
            fh.write(f"{k} {float(x)!r} {float(y)!r} {mesh.node_tags[k]}\n")
        fh.write(f"# elements {mesh.n_elements}\n")
        for a, b, c in mesh.elements:
            fh.write(f"{a} {b} {c}\n")
