import numpy as np
import pytest

from spdefem.assembly import (
    DirichletSystem,
    ProblemSpec,
    apply_dirichlet,
    assemble_operators,
    default_garding_shift,
    l2_error_vs_function,
    l2_norm,
    project_l2,
    projection_load,
)
from spdefem.linalg import solve_nonsymmetric
from spdefem.mesh import (
    BoundaryLayout,
    DIRICHLET,
    INTERIOR,
    Mesh,
    build_rectangle_mesh,
)

from dense_oracle import assemble_dense, dense_project


def reference_triangle_mesh():
    """Single-element mesh on the triangle (0,0), (1,0), (0,1)."""
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    elements = np.array([[0, 1, 2]])
    tags = np.array([DIRICHLET] * 3, dtype="U9")
    edges = np.array([[0, 1], [1, 2], [2, 0]])
    etags = np.array([DIRICHLET] * 3, dtype="U9")
    return Mesh(1.0, 1.0, 1, 1, nodes, elements, tags, edges, etags, h=np.sqrt(2))


def test_local_stiffness_frozen():
    m = reference_triangle_mesh()
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0, c0_override=0.0))
    expected = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]], dtype=float)
    assert np.allclose(ops.K.to_dense(), expected, atol=1e-14)


def test_local_mass_frozen():
    m = reference_triangle_mesh()
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0, c0_override=0.0))
    expected = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]], dtype=float) / 24.0
    assert np.allclose(ops.M.to_dense(), expected, atol=1e-15)


def test_local_advection_frozen():
    m = reference_triangle_mesh()
    plain = assemble_operators(m, ProblemSpec(diffusion=1.0, c0_override=0.0))
    adv = assemble_operators(
        m, ProblemSpec(diffusion=1.0, velocity=(1.0, 0.0), c0_override=0.0)
    )
    C = adv.K.to_dense() - plain.K.to_dense()
    expected = np.array([[-1, 1, 0], [-1, 1, 0], [-1, 1, 0]], dtype=float) / 6.0
    assert np.allclose(C, expected, atol=1e-15)


def test_mass_partition_of_unity():
    rng = np.random.default_rng(0)
    for _ in range(5):
        nx, ny = rng.integers(1, 9, size=2)
        L1, L2 = rng.uniform(0.5, 3.0, size=2)
        m = build_rectangle_mesh(L1, L2, int(nx), int(ny))
        ops = assemble_operators(m, ProblemSpec(diffusion=1.0))
        assert ops.M.csr.sum() == pytest.approx(L1 * L2, rel=1e-12)


def test_stiffness_kernel_of_constants():
    m = build_rectangle_mesh(2, 1, 5, 4, BoundaryLayout.all_neumann())
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0, c0_override=0.0))
    assert np.max(np.abs(ops.K @ np.ones(m.n_nodes))) <= 1e-12


def test_advection_skew_on_interior():
    m = build_rectangle_mesh(1, 1, 6, 6, BoundaryLayout.all_neumann())
    base = assemble_operators(m, ProblemSpec(diffusion=1.0, c0_override=0.0))
    adv = assemble_operators(
        m, ProblemSpec(diffusion=1.0, velocity=(1.0, 2.0), c0_override=0.0)
    )
    C = adv.K.csr - base.K.csr
    ones = np.ones(m.n_nodes)
    assert abs(ones @ (C @ ones)) <= 1e-12
    # divergence-free constant advection contributes no energy on fields
    # supported away from the boundary
    rng = np.random.default_rng(1)
    interior = m.node_tags == INTERIOR
    for _ in range(20):
        v = np.where(interior, rng.standard_normal(m.n_nodes), 0.0)
        assert abs(v @ (C @ v)) <= 1e-12 * (v @ v)


def test_discrete_coercivity_with_default_shift():
    m = build_rectangle_mesh(1, 1, 8, 8, BoundaryLayout.inflow_dirichlet())
    spec = ProblemSpec(diffusion=1e-2, velocity=(1.0, 0.25), dirichlet_value=1.0)
    ops = assemble_operators(m, spec)
    assert ops.c0 == pytest.approx(
        (1.0 ** 2 + 0.25 ** 2) / (2 * 1e-2), rel=1e-12
    )
    K_ff = ops.K.to_dense()[np.ix_(ops.free_nodes, ops.free_nodes)]
    rng = np.random.default_rng(2)
    for _ in range(200):
        v = rng.standard_normal(K_ff.shape[0])
        v /= np.linalg.norm(v)
        assert v @ K_ff @ v > 0


def test_default_garding_shift_values():
    assert default_garding_shift(ProblemSpec(diffusion=1.0)) == 0.0
    assert default_garding_shift(
        ProblemSpec(diffusion=1.0, velocity=(1.0, 0.0))
    ) == pytest.approx(0.5)
    assert default_garding_shift(
        ProblemSpec(diffusion=1e-4, velocity=(1.0, 0.0))
    ) == pytest.approx(5000.0)


def test_non_elliptic_diffusion_rejected():
    m = build_rectangle_mesh(1, 1, 2, 2)
    with pytest.raises(ValueError):
        assemble_operators(m, ProblemSpec(diffusion=-1.0))
    with pytest.raises(ValueError):
        assemble_operators(
            m, ProblemSpec(diffusion=np.array([[1.0, 2.0], [2.0, 1.0]]))
        )


def test_oracle_equivalence_sweep():
    """Assembled global matrices equal the loop/quadrature oracle."""
    rng = np.random.default_rng(3)
    configs = [
        dict(diffusion=1.0, velocity=None, robin_alpha=0.0, c0=0.0, upwind=False,
             layout=BoundaryLayout.all_dirichlet()),
        dict(diffusion=np.array([[2.0, 0.3], [0.3, 1.0]]), velocity=(0.7, -0.4),
             robin_alpha=0.0, c0=1.5, upwind=False,
             layout=BoundaryLayout.inflow_dirichlet()),
        dict(diffusion=1e-3, velocity=(1.0, 0.2), robin_alpha=0.0, c0=0.0,
             upwind=True, layout=BoundaryLayout.inflow_dirichlet()),
        dict(diffusion=0.5, velocity=None, robin_alpha=2.0, c0=0.0, upwind=False,
             layout=BoundaryLayout(left="dirichlet", right="robin",
                                   bottom="robin", top="neumann")),
    ]
    for cfg in configs:
        nx, ny = rng.integers(1, 6, size=2)
        L1, L2 = rng.uniform(0.5, 3.0, size=2)
        m = build_rectangle_mesh(L1, L2, int(nx), int(ny), cfg["layout"])
        spec = ProblemSpec(
            diffusion=cfg["diffusion"], velocity=cfg["velocity"],
            robin_alpha=cfg["robin_alpha"], c0_override=cfg["c0"],
            upwind=cfg["upwind"],
        )
        ops = assemble_operators(m, spec)
        M_d, K_d, W_d = assemble_dense(
            m, cfg["diffusion"], cfg["velocity"], cfg["robin_alpha"],
            cfg["c0"], cfg["upwind"],
        )
        assert np.allclose(ops.M.to_dense(), M_d, atol=1e-12)
        assert np.allclose(ops.K.to_dense(), K_d, atol=1e-12)
        assert np.allclose(ops.load_weights, W_d, atol=1e-13)


def test_project_constant_and_linear():
    m = build_rectangle_mesh(1, 1, 4, 4)
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0))
    ones = project_l2(m, ops.M, lambda x, y: np.ones_like(x))
    assert np.allclose(ones, 1.0, atol=1e-12)
    lin = project_l2(m, ops.M, lambda x, y: x)
    assert np.allclose(lin, m.nodes[:, 0], atol=1e-12)


def test_project_quadratic_vs_dense_oracle():
    m = build_rectangle_mesh(1, 1, 1, 1)
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0))
    g = lambda x, y: x ** 2
    u = project_l2(m, ops.M, g)
    expected = dense_project(m, ops.M.to_dense(), g)
    assert np.allclose(u, expected, atol=1e-12)
    b = projection_load(m, g)
    assert np.allclose(ops.M @ u, b, atol=1e-12)


def test_apply_dirichlet_homogeneous():
    m = build_rectangle_mesh(1, 1, 3, 3, BoundaryLayout.all_dirichlet())
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0, dirichlet_value=0.0))
    rng = np.random.default_rng(4)
    rhs = rng.random(m.n_nodes)
    S_red, rhs_red = apply_dirichlet(ops, ops.K, rhs)
    x = solve_nonsymmetric(S_red, rhs_red, tol=1e-12)
    assert np.allclose(x[ops.dirichlet_nodes], 0.0, atol=1e-12)


def test_apply_dirichlet_steady_constant():
    # g_D = 1, S = M + dt K, X0 = 1: constants are steady for pure diffusion
    m = build_rectangle_mesh(1, 1, 4, 4, BoundaryLayout.inflow_dirichlet())
    ops = assemble_operators(
        m, ProblemSpec(diffusion=1.0, dirichlet_value=1.0, c0_override=0.0)
    )
    dt = 0.1
    S = ops.M + dt * ops.K
    ones = np.ones(m.n_nodes)
    S_red, rhs_red = apply_dirichlet(ops, S, ops.M @ ones)
    x = solve_nonsymmetric(S_red, rhs_red, tol=1e-12)
    assert np.allclose(x, 1.0, atol=1e-10)


def test_apply_dirichlet_strip_laplace():
    # quasi-1D steady solve: linear pressure profile reproduced exactly
    m = build_rectangle_mesh(2.0, 0.25, 8, 1, BoundaryLayout.pressure_drop())
    g = lambda x, y: np.where(x == 0.0, 1.0, 0.0)
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0, dirichlet_value=g))
    S_red, rhs_red = apply_dirichlet(ops, ops.K, np.zeros(m.n_nodes))
    x = solve_nonsymmetric(S_red, rhs_red, tol=1e-13)
    assert np.allclose(x, 1.0 - m.nodes[:, 0] / 2.0, atol=1e-10)


def test_dirichlet_system_matches_apply_dirichlet():
    m = build_rectangle_mesh(1, 1, 3, 3, BoundaryLayout.inflow_dirichlet())
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0, dirichlet_value=2.0))
    S = ops.M + 0.02 * ops.K
    rng = np.random.default_rng(6)
    rhs = rng.random(m.n_nodes)
    S_red, rhs_red = apply_dirichlet(ops, S, rhs)
    full = solve_nonsymmetric(S_red, rhs_red, tol=1e-13)
    system = DirichletSystem(ops, S)
    x_free = solve_nonsymmetric(system.S_ff, system.reduce_rhs(rhs), tol=1e-13)
    assert np.allclose(system.expand(x_free), full, atol=1e-11)


def test_l2_norm_examples():
    m = build_rectangle_mesh(1, 1, 3, 3)
    ops = assemble_operators(m, ProblemSpec(diffusion=1.0))
    assert l2_norm(ops.M, np.ones(m.n_nodes)) == pytest.approx(1.0, rel=1e-13)

    m2 = build_rectangle_mesh(3, 2, 4, 4)
    ops2 = assemble_operators(m2, ProblemSpec(diffusion=1.0))
    assert l2_norm(ops2.M, 2 * np.ones(m2.n_nodes)) == pytest.approx(
        2 * np.sqrt(6), rel=1e-13
    )

    m3 = build_rectangle_mesh(1, 1, 16, 16)
    ops3 = assemble_operators(m3, ProblemSpec(diffusion=1.0))
    assert l2_norm(ops3.M, m3.nodes[:, 0]) == pytest.approx(
        np.sqrt(1.0 / 3.0), abs=1e-10
    )


def test_l2_error_quadrature_exact_for_p1():
    # a P1 field compared against itself as a function: zero error
    m = build_rectangle_mesh(1, 1, 5, 5)
    err = l2_error_vs_function(m, m.nodes[:, 0], lambda x, y: x)
    assert err <= 1e-14
