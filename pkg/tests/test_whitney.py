import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decaphi import BoxMeshSpec, assemble_hodges, barycentric_gradients, build_complex, eval_whitney, generate_box_mesh
from decaphi.errors import DegenerateTet, NonPositiveMaterial, PointOutsideTet
from decaphi.materials import EPS0, MU0, TetMaterials

import oracles
from conftest import UNIT_TET


def _mats(n, eps=EPS0, mu=MU0, chi=None):
    eps = np.full(n, eps, dtype=complex)
    mu = np.full(n, mu)
    chi = mu * eps**2 if chi is None else np.full(n, chi, dtype=complex)
    return TetMaterials(eps=eps, mu=mu, chi=chi)


def test_reference_tet_gradients():
    g = barycentric_gradients(UNIT_TET).grads[0]
    np.testing.assert_array_equal(g, [[-1, -1, -1], [1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_gradients_sum_to_zero_and_match_oracle(rng):
    for _ in range(10):
        v = oracles.random_tet(rng)
        f = barycentric_gradients(v)
        g = f.grads[0]
        assert np.abs(g.sum(axis=0)).max() <= 1e-12 * np.abs(g).max()
        np.testing.assert_allclose(g, oracles.gradients(v), rtol=1e-12, atol=1e-12 * np.abs(g).max())
        for n in range(4):
            np.testing.assert_allclose(f.barycentric(0, v[n]), np.eye(4)[n], atol=1e-12)


def test_scaled_tet_gradients_halve(rng):
    v = oracles.random_tet(rng)
    g1 = barycentric_gradients(v).grads[0]
    g2 = barycentric_gradients(2 * v).grads[0]
    np.testing.assert_allclose(g2, g1 / 2, rtol=1e-13, atol=1e-15)


def test_degenerate_geometry_rejected():
    flat = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(DegenerateTet):
        barycentric_gradients(flat)


def test_whitney0_partition_of_unity(rng, unit_tet):
    for _ in range(5):
        lam = rng.dirichlet(np.ones(4))
        x = lam @ unit_tet.vertices[unit_tet.tets[0]]
        total = sum(eval_whitney(unit_tet, 0, 0, n, x) for n in range(4))
        assert abs(total - 1) < 1e-14


def test_whitney1_matches_oracle_formula(rng):
    v = oracles.random_tet(rng)
    cx = build_complex(v, [[0, 1, 2, 3]])
    x = rng.dirichlet(np.ones(4)) @ v
    for e, (a, b) in enumerate(cx.edges):
        np.testing.assert_allclose(eval_whitney(cx, 0, 1, e, x), oracles.whitney1(v, a, b, x), rtol=1e-11, atol=1e-12)
    for f, (a, b, c) in enumerate(cx.faces):
        np.testing.assert_allclose(eval_whitney(cx, 0, 2, f, x), oracles.whitney2(v, a, b, c, x), rtol=1e-11, atol=1e-12)


def test_edge_form_line_integral(rng):
    v = oracles.random_tet(rng)
    cx = build_complex(v, [[0, 1, 2, 3]])
    for e, (a, b) in enumerate(cx.edges):
        for e2, (p, q) in enumerate(cx.edges):
            pts, w = oracles.line_rule(v[p], v[q])
            t = v[q] - v[p]
            val = sum(wi * eval_whitney(cx, 0, 1, e, x) @ t for x, wi in zip(pts, w))
            assert abs(val - (e == e2)) < 1e-12


def test_face_form_flux(rng):
    v = oracles.random_tet(rng)
    cx = build_complex(v, [[0, 1, 2, 3]])
    for f, _ in enumerate(cx.faces):
        for f2, (a, b, c) in enumerate(cx.faces):
            pts, w = oracles.triangle_rule(v[a], v[b], v[c])
            n = np.cross(v[b] - v[a], v[c] - v[a])
            n /= np.linalg.norm(n)
            val = sum(wi * eval_whitney(cx, 0, 2, f, x) @ n for x, wi in zip(pts, w))
            assert abs(val - (f == f2)) < 1e-12


def test_point_outside_tet(unit_tet):
    with pytest.raises(PointOutsideTet):
        eval_whitney(unit_tet, 0, 1, 0, (1.0, 1.0, 1.0))


def test_simplex_outside_tet_is_zero(two_tets):
    e = two_tets.edge_index(0, 1)
    x = two_tets.vertices[two_tets.tets[1]].mean(axis=0)
    t = 1 if 0 not in two_tets.tets[1] else 0
    assert np.all(eval_whitney(two_tets, t, 1, e, x) == 0)


def test_single_tet_hodges_match_quadrature_oracle(rng):
    v = oracles.random_tet(rng)
    cx = build_complex(v, [[0, 1, 2, 3]])
    h = assemble_hodges(cx, _mats(1))
    ref_e = oracles.galerkin_eps1(v, cx.edges, EPS0)
    ref_m = oracles.galerkin_mu_inv2(v, cx.faces, MU0)
    np.testing.assert_allclose(h.star_eps1.toarray(), ref_e, rtol=1e-12, atol=1e-12 * np.abs(ref_e).max())
    np.testing.assert_allclose(h.star_mu_inv2.toarray(), ref_m, rtol=1e-12, atol=1e-12 * np.abs(ref_m).max())


def test_galerkin_chi_matches_mass_oracle(rng):
    v = oracles.random_tet(rng)
    cx = build_complex(v, [[0, 1, 2, 3]])
    chi = 3.0
    h = assemble_hodges(cx, _mats(1, chi=chi))
    pts, w = oracles.tet_rule(v)
    lam = np.array([oracles.barycentric(v, p) for p in pts])
    ref = chi * np.einsum("q,qi,qj->ij", w, lam, lam)
    np.testing.assert_allclose(h.star_chi0_galerkin.toarray().real, ref, rtol=1e-12)


def test_diagonal_chi_quarter_rule(unit_tet):
    chi = 2.5
    h = assemble_hodges(unit_tet, _mats(1, chi=chi))
    V = unit_tet.volumes[0]
    np.testing.assert_allclose(h.star_chi0_diag, np.full(4, chi * V / 4), rtol=1e-15)
    assert np.all(h.star_chi_inv3_diag * h.star_chi0_diag == 1.0)


def test_diagonal_chi_inverse_within_rounding(box333):
    cx, _ = box333
    sigma = np.where(cx.centroids()[:, 0] > 0.015, 5.8e7, 0.0)
    eps = EPS0 + 1j * sigma / (2 * np.pi * 1e3)
    mats = TetMaterials(eps=eps, mu=np.full(cx.N3, MU0), chi=MU0 * eps**2)
    h = assemble_hodges(cx, mats)
    prod = h.star_chi_inv3_diag * h.star_chi0_diag
    assert np.abs(prod - 1).max() <= 4 * np.finfo(float).eps


def test_hodges_spd_on_vacuum_cube(cube6):
    h = assemble_hodges(cube6, _mats(cube6.N3))
    for m in (h.star_eps1, h.star_mu_inv2, h.star_chi0_galerkin):
        a = m.toarray().real
        assert np.abs(a - a.T).max() == 0
        assert np.linalg.eigvalsh(a).min() > 0


def test_lossy_hodge_is_complex_symmetric(cube6):
    eps = np.full(cube6.N3, EPS0 + 1j * 1e-3)
    h = assemble_hodges(cube6, TetMaterials(eps=eps, mu=np.full(cube6.N3, MU0), chi=MU0 * eps**2))
    a = h.star_eps1.toarray()
    assert np.abs(a.imag).max() > 0
    assert np.abs(a - a.T).max() == 0


def test_hodge_scaling_laws(rng):
    v = oracles.random_tet(rng)
    cx1 = build_complex(v, [[0, 1, 2, 3]])
    cx2 = build_complex(3.0 * v, [[0, 1, 2, 3]])
    h1 = assemble_hodges(cx1, _mats(1))
    h2 = assemble_hodges(cx2, _mats(1))
    h1e = assemble_hodges(cx1, _mats(1, eps=7 * EPS0))
    np.testing.assert_allclose(h2.star_eps1.toarray(), 3.0 * h1.star_eps1.toarray(), rtol=1e-12)
    np.testing.assert_allclose(h2.star_mu_inv2.toarray(), h1.star_mu_inv2.toarray() / 3.0, rtol=1e-12)
    np.testing.assert_allclose(h1e.star_eps1.toarray(), 7 * h1.star_eps1.toarray(), rtol=1e-14)


def test_sparsity_follows_shared_tets(two_tets):
    h = assemble_hodges(two_tets, _mats(2))
    in_tet = [set(two_tets.tet_edges[t]) for t in range(2)]
    a = h.star_eps1.tocoo()
    for i, j in zip(a.row, a.col):
        assert any(i in s and j in s for s in in_tet)
    e0 = two_tets.edge_index(0, 1)
    e4 = two_tets.edge_index(3, 4)
    assert h.star_eps1[e0, e4] == 0


@settings(max_examples=15, deadline=None)
@given(st.randoms(use_true_random=False))
def test_hodges_invariant_under_tet_permutation(r):
    cx = generate_box_mesh(BoxMeshSpec((1.0, 1.0, 1.0), (2, 1, 1)))
    tets = [list(t) for t in cx.tets]
    r.shuffle(tets)
    for t in tets:
        r.shuffle(t)
    cy = build_complex(cx.vertices, tets)
    a = assemble_hodges(cx, _mats(cx.N3))
    b = assemble_hodges(cy, _mats(cy.N3))
    for m1, m2 in ((a.star_eps1, b.star_eps1), (a.star_mu_inv2, b.star_mu_inv2)):
        d = abs(m1 - m2).max()
        assert d <= 1e-14 * abs(m1).max()


def test_nonpositive_material_rejected(unit_tet):
    with pytest.raises(NonPositiveMaterial):
        assemble_hodges(unit_tet, _mats(1, eps=-1.0))
    with pytest.raises(NonPositiveMaterial):
        assemble_hodges(unit_tet, _mats(1, mu=0.0))
    with pytest.raises(NonPositiveMaterial):
        assemble_hodges(unit_tet, _mats(1, chi=0.0))
