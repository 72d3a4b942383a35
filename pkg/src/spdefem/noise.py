"""Q-Wiener process sampling by truncated spectral expansion.

The covariance operator shares the cosine eigenbasis of the Neumann
Laplacian on the rectangle,

    e_0(x) = sqrt(1/L),   e_i(x) = sqrt(2/L) cos(i pi x / L),

tensorized over the two axes, with eigenvalues

    lambda_{i,j} = (i^2 + j^2) ** -(beta + epsilon).

The formula is singular at (0,0); that mode is excluded (lambda_00 = 0).
Truncation keeps i < i_max, j < j_max, so i_max = j_max = 1 retains no
modes at all.

Sampling is refinement-coupled: per-mode standard normal draws are
generated once at the finest dyadic level from a counter-based Philox
stream keyed by (seed, i, j), and every coarser level is constructed by
exact pairwise summation of its children (never resampled). Any mode and
step is therefore reproducible independent of iteration order, and
distinct (seed, realization) pairs can be sampled fully in parallel.
"""

from dataclasses import dataclass, field

import numpy as np

MULTIPLICATIVE = "multiplicative"
ADDITIVE = "additive"


@dataclass(frozen=True)
class NoiseSpec:
    """Spectral description of the covariance operator.

    i_max and j_max count retained indices per axis (i runs 0..i_max-1);
    the (0,0) mode is always dropped.
    """

    beta: float = 1.0
    epsilon: float = 1e-3
    i_max: int = 32
    j_max: int = 32
    L1: float = 1.0
    L2: float = 1.0
    kind: str = MULTIPLICATIVE

    def __post_init__(self):
        if self.beta <= 0 or self.epsilon <= 0:
            raise ValueError("beta and epsilon must be positive")
        if self.i_max < 1 or self.j_max < 1:
            raise ValueError("truncation indices must be >= 1")
        if self.kind not in (MULTIPLICATIVE, ADDITIVE):
            raise ValueError(f"unknown noise kind {self.kind!r}")

    def modes(self):
        """(n_modes, 2) int array of retained (i, j) pairs, (0,0) excluded."""
        ii, jj = np.meshgrid(
            np.arange(self.i_max), np.arange(self.j_max), indexing="ij"
        )
        pairs = np.column_stack([ii.ravel(), jj.ravel()])
        return pairs[1:]  # first entry is (0, 0)

    @property
    def n_modes(self):
        return self.i_max * self.j_max - 1


def eigenvalue(i, j, spec):
    """Covariance eigenvalue; zero for the excluded (0,0) mode."""
    if i == 0 and j == 0:
        return 0.0
    return float(i * i + j * j) ** -(spec.beta + spec.epsilon)


def mode_eigenvalues(spec):
    """Eigenvalues for every retained mode, aligned with spec.modes()."""
    m = spec.modes()
    r2 = (m[:, 0] ** 2 + m[:, 1] ** 2).astype(float)
    return r2 ** -(spec.beta + spec.epsilon)


def trace(spec):
    """Sum of retained eigenvalues (finite, monotone in truncation)."""
    return float(mode_eigenvalues(spec).sum())


def _eigenfunction_1d(i, x, L):
    if i == 0:
        return np.full_like(np.asarray(x, dtype=float), np.sqrt(1.0 / L))
    return np.sqrt(2.0 / L) * np.cos(i * np.pi * np.asarray(x, dtype=float) / L)


def eigenfunction(i, j, x, y, L1=1.0, L2=1.0):
    """Tensorized cosine eigenfunction e_{i,j} at points (x, y)."""
    return _eigenfunction_1d(i, x, L1) * _eigenfunction_1d(j, y, L2)


def node_basis(spec, mesh):
    """(n_nodes, n_modes) table of eigenfunction values at mesh nodes.

    Precomputed once per mesh so increment evaluation is a single
    matrix-vector product.
    """
    x = mesh.nodes[:, 0]
    y = mesh.nodes[:, 1]
    ex = np.empty((spec.i_max, x.size))
    for i in range(spec.i_max):
        ex[i] = _eigenfunction_1d(i, x, spec.L1)
    ey = np.empty((spec.j_max, y.size))
    for j in range(spec.j_max):
        ey[j] = _eigenfunction_1d(j, y, spec.L2)
    m = spec.modes()
    return (ex[m[:, 0]] * ey[m[:, 1]]).T.copy()


@dataclass(frozen=True)
class WienerPath:
    """Realized increments of the truncated expansion at one time grid.

    increments[m, k] holds sqrt(lambda_k * dt) * xi for mode k at step m;
    the sqrt(lambda dt) scaling is baked in. Coarser paths in the same
    family satisfy increments[m] == child[2m] + child[2m+1] exactly.
    """

    seed: int
    level: int
    n_steps: int
    dt: float
    increments: np.ndarray
    spec: NoiseSpec = field(repr=False)

    def __post_init__(self):
        self.increments.setflags(write=False)


def _mode_normals(seed, i, j, count):
    ss = np.random.SeedSequence(entropy=(int(seed), int(i), int(j)))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.standard_normal(count)


def sample_path(spec, seed, m_fine, coarse_steps=(), T=1.0):
    """Sample one realization and its coarser couplings.

    Parameters
    ----------
    spec : NoiseSpec
    seed : int
        64-bit realization seed; together with spec and T it fully
        determines every increment (deterministic replay).
    m_fine : int
        Steps at the finest level.
    coarse_steps : iterable of int
        Coarser step counts; each must divide m_fine by a power of two.
    T : float
        Final time; dt at each level is T / steps.

    Returns
    -------
    dict mapping step count -> WienerPath, including m_fine itself.
    Every level is built by repeated pairwise halving from the finest,
    so adjacent dyadic levels sum exactly.
    """
    m_fine = int(m_fine)
    if m_fine < 1:
        raise ValueError("m_fine must be >= 1")
    wanted = sorted(set(int(s) for s in coarse_steps), reverse=True)
    for s in wanted:
        if s < 1 or m_fine % s != 0:
            raise ValueError(f"coarse level {s} does not divide m_fine={m_fine}")
        ratio = m_fine // s
        if ratio & (ratio - 1):
            raise ValueError(
                f"coarse level {s} is not a dyadic refinement of {m_fine}"
            )

    lam = mode_eigenvalues(spec)
    dt_fine = T / m_fine
    modes = spec.modes()
    incr = np.empty((m_fine, spec.n_modes))
    scale = np.sqrt(lam * dt_fine)
    for k, (i, j) in enumerate(modes):
        incr[:, k] = scale[k] * _mode_normals(seed, i, j, m_fine)

    family = {
        m_fine: WienerPath(
            seed=int(seed), level=0, n_steps=m_fine, dt=dt_fine,
            increments=incr, spec=spec,
        )
    }
    steps = m_fine
    cur = incr
    level = 0
    coarsest = wanted[-1] if wanted else m_fine
    while steps > coarsest:
        cur = cur[0::2] + cur[1::2]
        steps //= 2
        level += 1
        if steps in wanted or steps == coarsest:
            family[steps] = WienerPath(
                seed=int(seed), level=level, n_steps=steps, dt=T / steps,
                increments=cur, spec=spec,
            )
    missing = [s for s in wanted if s not in family]
    if missing:
        raise AssertionError(f"levels not produced: {missing}")
    return family


def evaluate_increment(path, m, mesh, basis=None):
    """Nodal field of the m-th increment: sum over modes of e_k(x) dW_k.

    basis may be a precomputed node_basis table; otherwise it is built on
    the fly (fine for occasional use, wasteful inside time loops).
    """
    if not 0 <= m < path.n_steps:
        raise ValueError(f"step {m} outside path of length {path.n_steps}")
    if basis is None:
        basis = node_basis(path.spec, mesh)
    return basis @ path.increments[m]


def increments_at_nodes(path, mesh, basis=None):
    """(n_steps, n_nodes) table of nodal increments for a whole path."""
    if basis is None:
        basis = node_basis(path.spec, mesh)
    return path.increments @ basis.T


def realization_seed(master_seed, realization):
    """Derive the 64-bit seed for one Monte Carlo realization."""
    ss = np.random.SeedSequence(entropy=(int(master_seed), int(realization)))
    return int(ss.generate_state(1, np.uint64)[0])
