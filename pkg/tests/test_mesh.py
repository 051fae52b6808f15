from itertools import combinations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from decaphi import BoxMeshSpec, build_complex, build_incidence, generate_box_mesh, validate_complex
from decaphi.errors import DanglingVertex, DegenerateTet, NonManifoldFace, StructureViolation
from decaphi.mesh import IncidenceSet

from conftest import UNIT_TET


def _subsimplices(tets):
    edges, faces = set(), set()
    for t in tets:
        s = sorted(t)
        edges.update(combinations(s, 2))
        faces.update(combinations(s, 3))
    return edges, faces


def test_single_tet_counts(unit_tet):
    assert unit_tet.counts == (4, 6, 4, 1)


def test_two_tets_counts(two_tets):
    edges, faces = _subsimplices([[0, 1, 2, 3], [1, 2, 3, 4]])
    assert two_tets.counts == (5, len(edges), len(faces), 2) == (5, 9, 7, 2)


def test_negative_orientation_is_fixed():
    cx = build_complex(UNIT_TET, [[0, 2, 1, 3]])
    assert cx.volumes[0] > 0
    v = cx.vertices[cx.tets[0]]
    assert np.linalg.det(v[1:] - v[0]) > 0


def test_edges_and_faces_are_sorted_and_unique(two_tets):
    assert np.all(two_tets.edges[:, 0] < two_tets.edges[:, 1])
    assert np.all(np.diff(two_tets.faces, axis=1) > 0)
    assert len({tuple(e) for e in two_tets.edges}) == two_tets.N1
    assert len({tuple(f) for f in two_tets.faces}) == two_tets.N2


def test_d0_start_end_rule(two_tets):
    d0 = build_incidence(two_tets).d0.toarray()
    for e, (a, b) in enumerate(two_tets.edges):
        assert d0[e, a] == -1 and d0[e, b] == 1
        assert np.count_nonzero(d0[e]) == 2


def test_d1_follows_face_loop(two_tets):
    inc = build_incidence(two_tets)
    d1 = inc.d1.toarray()
    for f, (a, b, c) in enumerate(two_tets.faces):
        assert d1[f, two_tets.edge_index(a, b)] == 1
        assert d1[f, two_tets.edge_index(b, c)] == 1
        assert d1[f, two_tets.edge_index(a, c)] == -1
        assert np.count_nonzero(d1[f]) == 3


def test_d2_sign_is_outward_normal():
    cx = generate_box_mesh(BoxMeshSpec((1.0, 2.0, 1.5), (2, 1, 2)))
    d2 = build_incidence(cx).d2.tocsr()
    cent = cx.centroids()
    for t in range(cx.N3):
        row = d2.getrow(t)
        assert row.nnz == 4
        for f, s in zip(row.indices, row.data):
            a, b, c = cx.vertices[cx.faces[f]]
            n = np.cross(b - a, c - a)
            outward = np.dot(n, (a + b + c) / 3 - cent[t]) > 0
            assert s == (1 if outward else -1)


@pytest.mark.parametrize("cells", [(1, 1, 1), (2, 1, 1), (2, 3, 2)])
def test_chain_identities_integer(cells):
    cx = generate_box_mesh(BoxMeshSpec((1.0, 1.0, 1.0), cells))
    inc = build_incidence(cx)
    for m in (inc.d0, inc.d1, inc.d2):
        assert np.issubdtype(m.dtype, np.integer)
        assert set(np.unique(m.data)) <= {-1, 1}
    assert (inc.d1 @ inc.d0).count_nonzero() == 0
    assert (inc.d2 @ inc.d1).count_nonzero() == 0


def test_interior_faces_have_two_opposite_tets(box333):
    cx, inc = box333
    d2t = inc.d2.T.tocsr()
    for f in range(cx.N2):
        row = d2t.getrow(f)
        if cx.face_tet_count[f] == 2:
            assert row.nnz == 2 and row.data.sum() == 0
        else:
            assert row.nnz == 1


def test_validate_reports(unit_tet, cube6):
    rep = validate_complex(unit_tet, build_incidence(unit_tet))
    assert rep.euler_characteristic == 1
    assert rep.curl_grad_residual == 0 and rep.div_curl_residual == 0
    rep6 = validate_complex(cube6, build_incidence(cube6))
    assert rep6.euler_characteristic == 1
    assert rep6.boundary_faces == 12
    assert "N0=8 N1=19 N2=18 N3=6" in rep6.summary()


def test_validate_detects_broken_incidence(unit_tet):
    inc = build_incidence(unit_tet)
    bad = inc.d1.tolil()
    bad[0, 0] = -bad[0, 0]
    with pytest.raises(StructureViolation):
        validate_complex(unit_tet, IncidenceSet(inc.d0, sp.csr_matrix(bad), inc.d2))


def test_degenerate_tet_rejected():
    flat = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(DegenerateTet):
        build_complex(flat, [[0, 1, 2, 3]])


def test_dangling_vertex_rejected():
    with pytest.raises(DanglingVertex):
        build_complex(np.vstack([UNIT_TET, [[5, 5, 5]]]), [[0, 1, 2, 3]])


def test_nonmanifold_face_rejected():
    v = np.vstack([UNIT_TET, [[1, 1, 1]], [[-1, -1, 2]]])
    with pytest.raises(NonManifoldFace):
        build_complex(v, [[0, 1, 2, 3], [1, 2, 3, 4], [1, 2, 3, 5]])


def test_edge_index_and_find_vertex(two_tets):
    e = two_tets.edge_index(3, 1)
    assert tuple(two_tets.edges[e]) == (1, 3)
    with pytest.raises(KeyError):
        two_tets.edge_index(0, 4)
    assert two_tets.find_vertex((1, 1, 1)) == 4
    with pytest.raises(KeyError):
        two_tets.find_vertex((0.5, 0.5, 0.5))


@settings(max_examples=25, deadline=None)
@given(st.randoms(use_true_random=False))
def test_permuted_input_gives_identical_complex(r):
    cx = generate_box_mesh(BoxMeshSpec((1.0, 1.0, 1.0), (2, 2, 1)))
    tets = [list(t) for t in cx.tets]
    r.shuffle(tets)
    for t in tets:
        r.shuffle(t)
    cy = build_complex(cx.vertices, tets)
    a, b = build_incidence(cx), build_incidence(cy)
    assert np.array_equal(cx.edges, cy.edges)
    assert np.array_equal(cx.faces, cy.faces)
    assert (a.d0 != b.d0).nnz == 0 and (a.d1 != b.d1).nnz == 0
    # d2 rows follow tet order; compare row sets
    rows_a = {tuple(sorted(zip(a.d2[i].indices, a.d2[i].data))) for i in range(cx.N3)}
    rows_b = {tuple(sorted(zip(b.d2[i].indices, b.d2[i].data))) for i in range(cy.N3)}
    assert rows_a == rows_b


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
def test_euler_characteristic_of_boxes(nx, ny, nz):
    cx = generate_box_mesh(BoxMeshSpec((1.0, 1.0, 1.0), (nx, ny, nz)))
    inc = build_incidence(cx)
    assert validate_complex(cx, inc).euler_characteristic == 1
    assert (inc.d1 @ inc.d0).count_nonzero() == 0
    assert (inc.d2 @ inc.d1).count_nonzero() == 0
