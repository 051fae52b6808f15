"""Whitney forms on tetrahedra and Galerkin Hodge-star assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTet, NonPositiveMaterial, PointOutsideTet
from .mesh import LOCAL_EDGES, LOCAL_FACES, MIN_TET_VOLUME, SimplicialComplex

# Symmetric 4-point rule, exact for polynomials of degree 2 on a tet.
_QA = 0.5854101966249685
_QB = 0.1381966011250105
QUAD_BARY = np.array(
    [
        [_QA, _QB, _QB, _QB],
        [_QB, _QA, _QB, _QB],
        [_QB, _QB, _QA, _QB],
        [_QB, _QB, _QB, _QA],
    ]
)
QUAD_WEIGHTS = np.full(4, 0.25)


@dataclass(frozen=True, eq=False)
class BarycentricFrame:
    """Constant barycentric gradients of each tet.

    ``grads[t, m]`` is the gradient of the barycentric coordinate of local
    vertex ``m`` in tet ``t`` (units 1/m).
    """

    origin: np.ndarray  # (N3, 3) coordinates of local vertex 0
    grads: np.ndarray  # (N3, 4, 3)
    volumes: np.ndarray  # (N3,)

    def barycentric(self, t: int, point) -> np.ndarray:
        r = np.asarray(point, dtype=float) - self.origin[t]
        lam = self.grads[t, 1:] @ r
        return np.concatenate([[1.0 - lam.sum()], lam])


def barycentric_gradients(tet_vertices) -> BarycentricFrame:
    """Solve the affine interpolation conditions for one or many tets.

    Args:
        tet_vertices: (4, 3) or (N3, 4, 3) coordinates.
    """
    p = np.asarray(tet_vertices, dtype=float)
    if p.ndim == 2:
        p = p[None]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)
    vol = np.linalg.det(jac) / 6.0
    if np.any(np.abs(vol) < MIN_TET_VOLUME):
        raise DegenerateTet("cannot build barycentric frame of a flat tet")
    # jac rows are edge vectors; columns of inv(jac) are grad lambda_1..3
    inv = np.linalg.inv(jac)
    g = np.empty((len(p), 4, 3))
    g[:, 1:] = np.transpose(inv, (0, 2, 1))
    g[:, 0] = -g[:, 1:].sum(axis=1)
    return BarycentricFrame(origin=p[:, 0].copy(), grads=g, volumes=np.abs(vol))


def frame_of(cx: SimplicialComplex) -> BarycentricFrame:
    return barycentric_gradients(cx.vertices[cx.tets])


def whitney_local(lam, grads, kind: int, ids):
    """Evaluate a Whitney form from barycentric data.

    ``ids`` lists local vertices in the orientation wanted: ``(m,)`` for a
    0-form, ``(m, n)`` for the edge m->n, ``(m, n, p)`` for the face
    m->n->p. ``lam`` may carry leading batch axes (..., 4); ``grads`` is
    (4, 3) or broadcastable (..., 4, 3).
    """
    lam = np.asarray(lam)
    g = np.asarray(grads)
    if kind == 0:
        (m,) = ids
        return lam[..., m]
    if kind == 1:
        m, n = ids
        return lam[..., m, None] * g[..., n, :] - lam[..., n, None] * g[..., m, :]
    if kind == 2:
        m, n, p = ids
        return 2.0 * (
            lam[..., m, None] * np.cross(g[..., n, :], g[..., p, :])
            + lam[..., n, None] * np.cross(g[..., p, :], g[..., m, :])
            + lam[..., p, None] * np.cross(g[..., m, :], g[..., n, :])
        )
    raise ValueError(f"Whitney forms of degree {kind} are not defined here")


def eval_whitney(cx: SimplicialComplex, tet: int, kind: int, simplex: int, point, tol=1e-12):
    """Value of the global Whitney ``kind``-form of ``simplex`` inside ``tet``.

    The global simplex orientation (sorted vertex ids) is used, so the
    returned field is the one whose cochain value on ``simplex`` is +1.
    A simplex not belonging to ``tet`` yields zero.

    Raises:
        PointOutsideTet: barycentric coordinates leave ``[0, 1]``.
    """
    frame = barycentric_gradients(cx.vertices[cx.tets[tet]])
    lam = frame.barycentric(0, point)
    if np.any(lam < -tol) or np.any(lam > 1 + tol):
        raise PointOutsideTet(f"point {tuple(point)} outside tet {tet}")
    g = frame.grads[0]
    verts = cx.tets[tet]
    glob = {0: lambda: [simplex], 1: lambda: cx.edges[simplex], 2: lambda: cx.faces[simplex]}
    gids = glob[kind]()
    local = []
    for v in gids:
        hit = np.flatnonzero(verts == v)
        if hit.size == 0:
            return 0.0 if kind == 0 else np.zeros(3)
        local.append(int(hit[0]))
    # gids are ascending, so local follows the global orientation directly
    return whitney_local(lam, g, kind, tuple(local))


def element_whitney1(frame: BarycentricFrame, signs: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Globally oriented edge forms at barycentric points ``lam`` (Q, 4).

    Returns (N3, Q, 6, 3).
    """
    g = frame.grads
    i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
    w = lam[None, :, i, None] * g[:, None, j, :] - lam[None, :, j, None] * g[:, None, i, :]
    return w * signs[:, None, :, None]


def element_whitney2(frame: BarycentricFrame, signs: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Globally oriented face forms at ``lam``; returns (N3, Q, 4, 3)."""
    g = frame.grads
    a, b, c = LOCAL_FACES[:, 0], LOCAL_FACES[:, 1], LOCAL_FACES[:, 2]
    cbc = np.cross(g[:, b], g[:, c])[:, None]
    cca = np.cross(g[:, c], g[:, a])[:, None]
    cab = np.cross(g[:, a], g[:, b])[:, None]
    w = 2.0 * (
        lam[None, :, a, None] * cbc + lam[None, :, b, None] * cca + lam[None, :, c, None] * cab
    )
    return w * signs[:, None, :, None]


def face_signs_sorted(cx: SimplicialComplex) -> np.ndarray:
    """Sign of each local face (ascending local order) w.r.t. its sorted global face."""
    loc = cx.tets[:, LOCAL_FACES]
    inv = (loc[..., 0] > loc[..., 1]).astype(int) + (loc[..., 0] > loc[..., 2]) + (
        loc[..., 1] > loc[..., 2]
    )
    return (1 - 2 * (inv % 2)).astype(float)


def element_matrices(cx: SimplicialComplex, frame: BarycentricFrame | None = None):
    """Unit-material element mass matrices of Whitney 0-, 1- and 2-forms.

    Returns three arrays of shapes (N3, 4, 4), (N3, 6, 6) and (N3, 4, 4)
    holding the integrals of ``W_i . W_j`` over each tet.
    """
    if frame is None:
        frame = frame_of(cx)
    vw = frame.volumes[:, None] * QUAD_WEIGHTS[None, :]  # (N3, Q)
    lam = QUAD_BARY
    m0 = np.einsum("tq,qi,qj->tij", vw, lam, lam)
    w1 = element_whitney1(frame, cx.tet_edge_signs.astype(float), lam)
    m1 = np.einsum("tq,tqik,tqjk->tij", vw, w1, w1)
    w2 = element_whitney2(frame, face_signs_sorted(cx), lam)
    m2 = np.einsum("tq,tqik,tqjk->tij", vw, w2, w2)
    # exact symmetry so that assembled stars are bitwise symmetric
    return tuple(0.5 * (m + m.transpose(0, 2, 1)) for m in (m0, m1, m2))


def _scatter(local: np.ndarray, idx: np.ndarray, n: int) -> sp.csr_matrix:
    k = idx.shape[1]
    rows = np.repeat(idx, k, axis=1).ravel()
    cols = np.tile(idx, (1, k)).ravel()
    m = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


@dataclass(frozen=True, eq=False)
class HodgeSet:
    """Material Hodge stars.

    Attributes:
        star_eps1: N1 x N1 Galerkin permittivity star (complex symmetric).
        star_mu_inv2: N2 x N2 Galerkin inverse-permeability star (real).
        star_chi0_galerkin: N0 x N0 Galerkin gauge-coefficient star.
        star_chi0_diag: N0 diagonal entries ``sum_t chi_t V_t / 4``.
        star_chi_inv3_diag: entrywise reciprocals of ``star_chi0_diag``.
    """

    star_eps1: sp.csr_matrix
    star_mu_inv2: sp.csr_matrix
    star_chi0_galerkin: sp.csr_matrix
    star_chi0_diag: np.ndarray
    star_chi_inv3_diag: np.ndarray

    def chi0(self, which: str = "diagonal"):
        if which == "diagonal":
            return sp.diags(self.star_chi0_diag, format="csr")
        if which == "galerkin":
            return self.star_chi0_galerkin
        raise ValueError(f"unknown chi Hodge {which!r}")

    def restrict(self, nodes: np.ndarray, edges: np.ndarray, faces: np.ndarray) -> "HodgeSet":
        """Hodge stars among the surviving ``nodes``, ``edges``, ``faces`` only."""
        return HodgeSet(
            star_eps1=self.star_eps1[edges][:, edges].tocsr(),
            star_mu_inv2=self.star_mu_inv2[faces][:, faces].tocsr(),
            star_chi0_galerkin=self.star_chi0_galerkin[nodes][:, nodes].tocsr(),
            star_chi0_diag=self.star_chi0_diag[nodes],
            star_chi_inv3_diag=self.star_chi_inv3_diag[nodes],
        )


def assemble_hodges(cx: SimplicialComplex, mats, frame: BarycentricFrame | None = None) -> HodgeSet:
    """Assemble all Hodge stars for per-tet materials at one frequency.

    Args:
        cx: primal complex.
        mats: object with per-tet arrays ``eps`` (complex), ``mu`` (real)
            and ``chi`` (complex), e.g. :class:`decaphi.materials.TetMaterials`.

    Raises:
        NonPositiveMaterial: ``Re eps <= 0``, ``mu <= 0`` or ``chi == 0``.
    """
    eps = np.asarray(mats.eps, dtype=complex)
    mu = np.asarray(mats.mu)
    chi = np.asarray(mats.chi, dtype=complex)
    if np.iscomplexobj(mu):
        if np.any(mu.imag != 0):
            raise NonPositiveMaterial("magnetic loss is not supported")
        mu = mu.real
    mu = mu.astype(float)
    if np.any(eps.real <= 0):
        raise NonPositiveMaterial(f"Re eps <= 0 in tet {np.flatnonzero(eps.real <= 0)[0]}")
    if np.any(mu <= 0):
        raise NonPositiveMaterial(f"mu <= 0 in tet {np.flatnonzero(mu <= 0)[0]}")
    if np.any(chi == 0):
        raise NonPositiveMaterial(f"chi == 0 in tet {np.flatnonzero(chi == 0)[0]}")

    m0, m1, m2 = element_matrices(cx, frame)
    if not np.any(eps.imag):
        eps = eps.real
    if not np.any(chi.imag):
        chi = chi.real
    star_eps1 = _scatter(m1 * eps[:, None, None], cx.tet_edges, cx.N1)
    star_mu_inv2 = _scatter(m2 / mu[:, None, None], cx.tet_faces, cx.N2)
    star_chi0 = _scatter(m0 * chi[:, None, None], cx.tets, cx.N0)

    diag = np.zeros(cx.N0, dtype=chi.dtype)
    np.add.at(diag, cx.tets.ravel(), np.repeat(chi * cx.volumes / 4.0, 4))
    if np.any(diag == 0):
        raise NonPositiveMaterial("node with vanishing aggregated chi")
    return HodgeSet(
        star_eps1=star_eps1,
        star_mu_inv2=star_mu_inv2,
        star_chi0_galerkin=star_chi0,
        star_chi0_diag=diag,
        star_chi_inv3_diag=1.0 / diag,
    )
