"""Boundary handling.

PMC needs nothing: truncated dual cells already imply zero tangential H.
PEC removes boundary nodes, edges and faces from the incidence matrices.
PBC identifies opposite x/y boundaries with Bloch phase factors through a
projection matrix ``full = P @ reduced``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import AsymmetricMesh, SelectorMissesBoundary
from .mesh import IncidenceSet, SimplicialComplex, build_incidence
from .whitney import HodgeSet

MATCH_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BoundaryClassification:
    """Sorted index arrays of boundary nodes, edges and faces."""

    nodes: np.ndarray
    edges: np.ndarray
    faces: np.ndarray


def classify_boundary(cx: SimplicialComplex, inc: IncidenceSet | None = None) -> BoundaryClassification:
    faces = np.flatnonzero(cx.face_tet_count == 1)
    return BoundaryClassification(
        nodes=np.unique(cx.faces[faces]),
        edges=_edges_of_faces(cx, faces, inc),
        faces=faces,
    )


def _edges_of_faces(cx, faces, inc=None) -> np.ndarray:
    if inc is None:
        inc = build_incidence(cx)
    if len(faces) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.unique(inc.d1[faces].indices).astype(np.int64)


def select_faces(cx: SimplicialComplex, bc: BoundaryClassification, selector, tol: float | None = None) -> np.ndarray:
    """Resolve a face selector to face indices.

    ``selector`` is ``"outer"`` (all boundary faces), an axis-plane name
    (``"xmin"``, ``"xmax"``, ``"ymin"``, ... meaning boundary faces lying in
    that plane of the bounding box), a list of those, or an explicit
    index array.
    """
    if selector is None:
        return np.zeros(0, dtype=np.int64)
    if isinstance(selector, str):
        selector = [selector]
    if len(selector) and not isinstance(selector[0], str):
        return np.unique(np.asarray(selector, dtype=np.int64))

    lo = cx.vertices.min(axis=0)
    hi = cx.vertices.max(axis=0)
    if tol is None:
        tol = 1e-9 * float(np.max(hi - lo))
    fv = cx.vertices[cx.faces[bc.faces]]  # (nb, 3, 3)
    picked = []
    for name in selector:
        if name == "outer":
            picked.append(bc.faces)
            continue
        try:
            axis = "xyz".index(name[0])
            side = {"min": lo, "max": hi}[name[1:]]
        except (ValueError, KeyError):
            raise SelectorMissesBoundary(f"unknown face selector {name!r}") from None
        on = np.all(np.abs(fv[:, :, axis] - side[axis]) <= tol, axis=1)
        picked.append(bc.faces[on])
    return np.unique(np.concatenate(picked)) if picked else np.zeros(0, dtype=np.int64)


def _complement(n: int, removed: np.ndarray) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[removed] = False
    return np.flatnonzero(mask)


def _old_to_new(n: int, keep: np.ndarray) -> np.ndarray:
    m = np.full(n, -1, dtype=np.int64)
    m[keep] = np.arange(len(keep))
    return m


@dataclass(frozen=True, eq=False)
class ReducedSystemMap:
    """Surviving entities after PEC removal and the reduced operators.

    Removed edge and node unknowns are implicitly zero (A tangential to PEC
    vanishes, PEC potential is grounded).
    """

    keep_nodes: np.ndarray
    keep_edges: np.ndarray
    keep_faces: np.ndarray
    node_map: np.ndarray
    edge_map: np.ndarray
    face_map: np.ndarray
    incidence: IncidenceSet
    hodges: HodgeSet | None
    removed_nodes: np.ndarray
    removed_edges: np.ndarray
    removed_faces: np.ndarray
    diagnostics: list[str] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.keep_nodes), len(self.keep_edges), len(self.keep_faces)

    def restrict_hodges(self, hodges: HodgeSet) -> HodgeSet:
        return hodges.restrict(self.keep_nodes, self.keep_edges, self.keep_faces)

    def scatter_edges(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.edge_map), dtype=np.result_type(x, float))
        out[self.keep_edges] = x
        return out

    def scatter_nodes(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.node_map), dtype=np.result_type(x, float))
        out[self.keep_nodes] = x
        return out

    def scatter_faces(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.face_map), dtype=np.result_type(x, float))
        out[self.keep_faces] = x
        return out


def apply_pec(
    cx: SimplicialComplex,
    inc: IncidenceSet,
    hodges: HodgeSet | None,
    bc: BoundaryClassification,
    pec_faces,
) -> ReducedSystemMap:
    """Remove PEC faces, their edges and their nodes from the discrete system.

    Args:
        pec_faces: selector accepted by :func:`select_faces`, or indices.

    Raises:
        SelectorMissesBoundary: a selected face is interior.
    """
    faces = select_faces(cx, bc, pec_faces)
    interior = np.setdiff1d(faces, bc.faces)
    if interior.size:
        raise SelectorMissesBoundary(f"face {interior[0]} is not on the mesh boundary")

    I_s = faces
    I_e = _edges_of_faces(cx, faces, inc)
    I_n = np.unique(cx.faces[faces]) if faces.size else np.zeros(0, dtype=np.int64)
    n0, n1, n2, _ = cx.counts
    kn, ke, kf = _complement(n0, I_n), _complement(n1, I_e), _complement(n2, I_s)
    red = IncidenceSet(
        d0=inc.d0[ke][:, kn].tocsr(),
        d1=inc.d1[kf][:, ke].tocsr(),
        d2=inc.d2[:, kf].tocsr(),
    )
    diag = []
    if faces.size and kn.size == 0:
        diag.append("no node survives PEC removal; refine the mesh to resolve potentials")
    return ReducedSystemMap(
        keep_nodes=kn,
        keep_edges=ke,
        keep_faces=kf,
        node_map=_old_to_new(n0, kn),
        edge_map=_old_to_new(n1, ke),
        face_map=_old_to_new(n2, kf),
        incidence=red,
        hodges=None if hodges is None else hodges.restrict(kn, ke, kf),
        removed_nodes=I_n,
        removed_edges=I_e,
        removed_faces=I_s,
        diagnostics=diag,
    )


def identity_map(cx: SimplicialComplex, inc: IncidenceSet, hodges: HodgeSet | None = None) -> ReducedSystemMap:
    """Pure PMC: nothing removed."""
    bc = BoundaryClassification(np.zeros(0, int), np.zeros(0, int), np.zeros(0, int))
    return apply_pec(cx, inc, hodges, bc, None)


@dataclass(frozen=True)
class BlochSpec:
    """Bloch periodicity in x and y of an axis-aligned cell."""

    Lx: float
    Ly: float
    kx: float = 0.0
    ky: float = 0.0

    @property
    def psi_x(self) -> float:
        return self.kx * self.Lx

    @property
    def psi_y(self) -> float:
        return self.ky * self.Ly

    @classmethod
    def for_mesh(cls, cx: SimplicialComplex, kx: float = 0.0, ky: float = 0.0) -> "BlochSpec":
        ext = cx.vertices.max(axis=0) - cx.vertices.min(axis=0)
        return cls(Lx=float(ext[0]), Ly=float(ext[1]), kx=kx, ky=ky)


def build_pbc_projection(
    cx: SimplicialComplex,
    bloch: BlochSpec,
    kind: str = "edge",
    keep: np.ndarray | None = None,
    tol: float = MATCH_TOL,
) -> sp.csr_matrix:
    """Projection from independent (master) unknowns onto all unknowns.

    Entities on the right (top) boundary are images of the left (bottom)
    ones translated by ``Lx`` (``Ly``) and carry the factor
    ``exp(-i psi_x)`` (``exp(-i psi_y)``); corner images carry the product.
    Edge images also pick up a sign when translation reverses the global
    edge orientation. Columns are ordered interior, left, bottom masters.

    Args:
        kind: ``"node"`` or ``"edge"``.
        keep: surviving entity indices after PEC reduction (rows of P).

    Raises:
        AsymmetricMesh: some boundary entity has no translated partner.
    """
    x0, y0 = cx.vertices[:, 0].min(), cx.vertices[:, 1].min()
    x1, y1 = x0 + bloch.Lx, y0 + bloch.Ly
    verts = cx.vertices
    tree = cKDTree(verts)

    if kind == "node":
        ents = np.arange(cx.N0)[:, None]
        n_ent = cx.N0
    elif kind == "edge":
        ents = cx.edges
        n_ent = cx.N1
    else:
        raise ValueError(f"unknown dof kind {kind!r}")
    if keep is None:
        keep = np.arange(n_ent)
    keep = np.asarray(keep, dtype=np.int64)

    ev = verts[ents]  # (n, k, 3)
    on_right = np.all(np.abs(ev[:, :, 0] - x1) <= tol, axis=1)
    on_top = np.all(np.abs(ev[:, :, 1] - y1) <= tol, axis=1)
    on_left = np.all(np.abs(ev[:, :, 0] - x0) <= tol, axis=1)
    on_bottom = np.all(np.abs(ev[:, :, 1] - y0) <= tol, axis=1)

    shift = np.stack([on_right * bloch.Lx, on_top * bloch.Ly, np.zeros(n_ent)], axis=1)
    is_image = on_right | on_top
    master = np.arange(n_ent)
    sign = np.ones(n_ent)
    img = np.flatnonzero(is_image)
    if img.size:
        target = ev[img] - shift[img][:, None, :]
        dist, idx = tree.query(target.reshape(-1, 3))
        if np.any(dist > tol):
            bad = img[np.argmax(dist.reshape(len(img), -1).max(axis=1))]
            raise AsymmetricMesh(f"{kind} {bad} has no periodic partner within {tol} m")
        idx = idx.reshape(len(img), -1)
        if kind == "node":
            master[img] = idx[:, 0]
        else:
            lo, hi = idx.min(axis=1), idx.max(axis=1)
            n0 = cx.N0
            keys = cx.edges[:, 0] * n0 + cx.edges[:, 1]
            pos = np.searchsorted(keys, lo * n0 + hi)
            pos = np.minimum(pos, len(keys) - 1)
            found = keys[pos] == lo * n0 + hi
            if not found.all():
                raise AsymmetricMesh(f"edge {img[~found][0]} has no periodic partner edge")
            master[img] = pos
            sign[img] = np.where(idx[:, 0] < idx[:, 1], 1.0, -1.0)

    phase = np.exp(-1j * (on_right * bloch.psi_x + on_top * bloch.psi_y))

    kept_mask = np.zeros(n_ent, dtype=bool)
    kept_mask[keep] = True
    if np.any(kept_mask[keep] & ~kept_mask[master[keep]]):
        raise AsymmetricMesh("PEC selection is not periodic: an image survives but its master does not")

    masters = keep[~is_image[keep]]
    group = np.where(on_left[masters], 1, np.where(on_bottom[masters], 2, 0))
    order = np.lexsort((masters, group))
    masters = masters[order]
    col = np.full(n_ent, -1, dtype=np.int64)
    col[masters] = np.arange(len(masters))

    row_of = np.full(n_ent, -1, dtype=np.int64)
    row_of[keep] = np.arange(len(keep))
    data = sign[keep] * phase[keep]
    P = sp.csr_matrix(
        (data, (row_of[keep], col[master[keep]])), shape=(len(keep), len(masters)), dtype=complex
    )
    P.sort_indices()
    return P
