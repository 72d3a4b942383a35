import numpy as np
import pytest

from spdefem.mesh import (
    BoundaryLayout,
    DIRICHLET,
    INTERIOR,
    NEUMANN,
    ROBIN,
    build_rectangle_mesh,
    layout_by_name,
    mesh_h,
    signed_areas,
    write_mesh,
)


def test_unit_square_single_cell():
    m = build_rectangle_mesh(1, 1, 1, 1, BoundaryLayout.all_dirichlet())
    assert m.n_nodes == 4
    assert m.n_elements == 2
    assert signed_areas(m).sum() == pytest.approx(1.0, rel=1e-15)


def test_benchmark_layout_counts():
    m = build_rectangle_mesh(3, 2, 6, 4, BoundaryLayout.inflow_dirichlet())
    assert m.n_nodes == 35
    assert m.n_elements == 48
    dirichlet = m.dirichlet_nodes
    assert dirichlet.size == 5
    assert np.all(m.nodes[dirichlet, 0] == 0.0)


def test_h_values():
    assert mesh_h(build_rectangle_mesh(1, 1, 1, 1)) == pytest.approx(np.sqrt(2))
    assert mesh_h(build_rectangle_mesh(1, 1, 4, 4)) == pytest.approx(np.sqrt(2) / 4)
    assert mesh_h(build_rectangle_mesh(1, 1, 2, 2)) == pytest.approx(np.sqrt(2) / 2)
    # 0.5 x 0.5 cells
    assert mesh_h(build_rectangle_mesh(3, 2, 6, 4)) == pytest.approx(np.sqrt(2) / 2)


def test_area_partition_sweep():
    rng = np.random.default_rng(42)
    for nx in range(1, 17):
        ny = int(rng.integers(1, 17))
        L1, L2 = rng.uniform(0.5, 4.0, size=2)
        m = build_rectangle_mesh(L1, L2, nx, ny)
        areas = signed_areas(m)
        assert np.all(areas > 0)
        assert areas.sum() == pytest.approx(L1 * L2, rel=1e-12)
        assert m.n_nodes == (nx + 1) * (ny + 1)
        assert m.n_elements == 2 * nx * ny


def test_boundary_tagging_and_precedence():
    m = build_rectangle_mesh(
        1, 1, 3, 3,
        BoundaryLayout(left=DIRICHLET, right=NEUMANN, bottom=NEUMANN, top=ROBIN),
    )
    x, y = m.nodes[:, 0], m.nodes[:, 1]
    on_boundary = (x == 0) | (x == 1) | (y == 0) | (y == 1)
    assert np.all((m.node_tags == INTERIOR) == ~on_boundary)
    # dirichlet wins at the (0,0) and (0,1) corners
    corner_ll = np.flatnonzero((x == 0) & (y == 0))[0]
    corner_tl = np.flatnonzero((x == 0) & (y == 1))[0]
    assert m.node_tags[corner_ll] == DIRICHLET
    assert m.node_tags[corner_tl] == DIRICHLET
    # robin beats neumann at the (1,1) corner
    corner_tr = np.flatnonzero((x == 1) & (y == 1))[0]
    assert m.node_tags[corner_tr] == ROBIN
    # every boundary edge carries its side's tag
    assert set(m.edge_tags) == {DIRICHLET, NEUMANN, ROBIN}


def test_invalid_arguments():
    with pytest.raises(ValueError):
        build_rectangle_mesh(0, 1, 2, 2)
    with pytest.raises(ValueError):
        build_rectangle_mesh(1, -1, 2, 2)
    with pytest.raises(ValueError):
        build_rectangle_mesh(1, 1, 0, 2)
    with pytest.raises(ValueError):
        BoundaryLayout(left="periodic")
    with pytest.raises(ValueError):
        layout_by_name("nope")


def test_mesh_immutable():
    m = build_rectangle_mesh(1, 1, 2, 2)
    with pytest.raises(ValueError):
        m.nodes[0, 0] = 5.0


def test_mesh_dump(tmp_path):
    m = build_rectangle_mesh(2, 1, 2, 1, BoundaryLayout.inflow_dirichlet())
    path = tmp_path / "mesh.txt"
    write_mesh(m, path)
    lines = path.read_text().splitlines()
    assert lines[0] == f"# nodes {m.n_nodes}"
    node_lines = lines[1 : 1 + m.n_nodes]
    first = node_lines[0].split()
    assert int(first[0]) == 0
    assert float(first[1]) == 0.0
    assert lines[1 + m.n_nodes] == f"# elements {m.n_elements}"
    assert len(lines) == 2 + m.n_nodes + m.n_elements
