import numpy as np
import pytest

from tensorfem.mesh import (Mesh, boundary_dofs, build_dofmap, dumps_mesh, load_mesh, loads_mesh,
                            lshape_mesh, single_element_mesh, strip_mesh, write_mesh)
from tensorfem.tensor_elements import build_element
from tensorfem.vector_elements import build_vector_element

TWO_TRIANGLES = ([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [1, 3, 2]])


def test_elements_are_sorted():
    m = Mesh(np.random.default_rng(0).random((10, 2)), [[5, 2, 9]])
    assert m.elements.tolist() == [[2, 5, 9]]


def test_single_and_two_triangles():
    m = single_element_mesh(2)
    assert m.n_edges == 3 and len(m.boundary["edge"]) == 3
    m = Mesh(*TWO_TRIANGLES)
    assert m.n_edges == 5 and len(m.boundary["edge"]) == 4
    interior = [g for g in range(m.n_edges) if len(m.facet_elements[g]) == 2]
    assert len(interior) == 1


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh([[0, 0], [0, 0], [1, 1]], [[0, 1, 2]])
    with pytest.raises(ValueError):
        Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 5]])
    with pytest.raises(ValueError):
        Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 1]])
    with pytest.raises(ValueError):
        Mesh(*TWO_TRIANGLES, curved={(0, 3): [0.5, 0.5]})


@pytest.mark.parametrize("make", [lambda: strip_mesh(0), lambda: strip_mesh(2, seed=3),
                                  lambda: lshape_mesh(0), lambda: lshape_mesh(1)])
def test_generated_mesh_invariants(make):
    m = make()
    assert np.all(np.diff(m.elements, axis=1) > 0)
    assert all(len(els) in (1, 2) for els in m.facet_elements)
    assert m.n_vertices - m.n_edges + m.n_elements == 1
    assert len(m.boundary["edge"]) == sum(len(els) == 1 for els in m.facet_elements)


def test_strip_level_zero_counts():
    m = strip_mesh(0)
    assert (m.n_vertices, m.n_edges, m.n_elements) == (31, 66, 36)
    assert set(np.unique(m.regions)) == {0, 1}
    assert np.isclose(m.vertices[:, 0].min(), -5) and np.isclose(m.vertices[:, 1].max(), 1)


def test_generators_are_deterministic():
    assert dumps_mesh(strip_mesh(1, seed=4)) == dumps_mesh(strip_mesh(1, seed=4))
    assert dumps_mesh(lshape_mesh(1)) == dumps_mesh(lshape_mesh(1))


def test_lshape_has_curved_edges_and_reentrant_vertex():
    m = lshape_mesh(0)
    assert m.curved
    assert any(m.is_curved(e) for e in range(m.n_elements))
    assert np.min(np.linalg.norm(m.vertices, axis=1)) < 1e-14


def test_file_roundtrip(tmp_path):
    m = lshape_mesh(0)
    path = tmp_path / "lshape.mesh"
    write_mesh(m, path)
    back = load_mesh(str(path))
    assert np.array_equal(back.elements, m.elements)
    assert np.array_equal(back.vertices, m.vertices)
    assert back.curved.keys() == m.curved.keys()
    assert dumps_mesh(back) == dumps_mesh(m)
    regions = strip_mesh(0)
    assert np.array_equal(loads_mesh(dumps_mesh(regions)).regions, regions.regions)


@pytest.mark.parametrize("text", [
    "dim 2\nvertices\n0 0\n1 0\n0 1\nfaces\n0 1 2\n",
    "vertices\n0 0\n1 0\n0 1\nelements\n0 1 2\n",
    "dim 2\n0 0\n",
    "dim 2\nvertices\n0 0\n1 0\n0 1\n",
])
def test_malformed_files(text):
    with pytest.raises(ValueError):
        loads_mesh(text)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_mesh("/nonexistent/path.mesh")


def test_dofmap_shared_polytopes_agree():
    m = strip_mesh(0)
    space = build_element("hhj", 2, 3)
    dm = build_dofmap(m, space)
    conn = space.connectivities()
    for gid, els in enumerate(m.facet_elements):
        if len(els) != 2:
            continue
        ids = []
        for e in els:
            local = [a for a, p in enumerate(conn) if p.kind == "edge"
                     and m.global_polytope(e, p) == ("edge", gid)]
            ids.append(dm.element_dofs[e, local].tolist())
        assert ids[0] == ids[1]
    cell_dofs = dm.element_dofs[:, dm.local_cell_mask]
    assert len(np.unique(cell_dofs)) == cell_dofs.size


def test_dofmap_independent_of_element_order():
    m = strip_mesh(0)
    perm = np.random.default_rng(2).permutation(m.n_elements)
    m2 = Mesh(m.vertices, m.elements[perm], m.regions[perm])
    space = build_element("hz", 2, 2)
    a, b = build_dofmap(m, space), build_dofmap(m2, space)
    assert a.n_dofs == b.n_dofs and a.class_counts == b.class_counts
    # the same global dof set (by polytope) is attached to the same physical element
    for e2, e in enumerate(perm):
        va = [m.global_polytope(e, p) for p in space.connectivities() if p.kind != "cell"]
        vb = [m2.global_polytope(e2, p) for p in space.connectivities() if p.kind != "cell"]
        assert [m.edges[g].tolist() if k == "edge" else g for k, g in va] == \
               [m2.edges[g].tolist() if k == "edge" else g for k, g in vb]


def test_dofmap_counts():
    m = strip_mesh(0)
    cg = build_dofmap(m, build_vector_element("CG", 2, 3))
    assert 3 * cg.n_dofs == 597
    assert build_dofmap(single_element_mesh(2), build_element("hz", 2, 1)).class_counts["vertex"] == 9


def test_boundary_dof_examples():
    m = single_element_mesh(2)
    assert len(boundary_dofs(m, build_element("hhj", 2, 2), selector="moment_trace")) == 9
    assert len(boundary_dofs(m, build_element("hz", 2, 2), selector="moment_trace")) == 15
    assert len(boundary_dofs(m, build_vector_element("CG", 2, 2), selector="deflection")) == 6
    with pytest.raises(ValueError):
        boundary_dofs(m, build_element("hz", 2, 2), selector="deflection")
    with pytest.raises(ValueError):
        boundary_dofs(m, build_element("hz", 2, 2), selector="bogus")


def test_empty_boundary_rejected():
    m = single_element_mesh(2)
    m.boundary = {k: set() for k in m.boundary}
    with pytest.raises(ValueError):
        boundary_dofs(m, build_element("hhj", 2, 2))


def test_tetrahedral_mesh_faces():
    verts = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]
    m = Mesh(verts, [[0, 1, 2, 3], [1, 2, 3, 4]])
    assert m.n_faces == 7 and m.n_edges == 9
    assert len(m.boundary["face"]) == 6
