"""Primal tetrahedral complex and its signed incidence matrices.

Orientation convention:

* edges point from the lower to the higher global vertex index;
* faces are stored with sorted vertices ``a < b < c`` and circulate
  ``a -> b -> c`` (right-hand rule);
* tets are stored in positive signed-volume order, so the induced
  boundary orientation of each face points out of the tet.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .errors import (
    DanglingVertex,
    DegenerateTet,
    MeshError,
    NonManifoldFace,
    StructureViolation,
)

MIN_TET_VOLUME = 1e-30

# local (i, j) pairs of a tet, i < j
LOCAL_EDGES = np.array(list(combinations(range(4), 2)), dtype=np.int64)
# face k omits local vertex k; remaining vertices kept in ascending local order
LOCAL_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]], dtype=np.int64)


def signed_volumes(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = vertices[tets]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    e3 = p[:, 3] - p[:, 0]
    return np.einsum("ij,ij->i", e1, np.cross(e2, e3)) / 6.0


def _parity3(t: np.ndarray) -> np.ndarray:
    """+1 for even permutations of each sorted row triple, -1 for odd."""
    inv = (
        (t[:, 0] > t[:, 1]).astype(np.int64)
        + (t[:, 0] > t[:, 2])
        + (t[:, 1] > t[:, 2])
    )
    return 1 - 2 * (inv % 2)


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Tetrahedral mesh with canonical edge and face enumeration.

    Attributes:
        vertices: (N0, 3) coordinates in meters.
        tets: (N3, 4) vertex indices in positive-volume order.
        edges: (N1, 2) sorted vertex pairs, lexicographically ordered.
        faces: (N2, 3) sorted vertex triples, lexicographically ordered.
        tet_edges: (N3, 6) global edge of each local pair in ``LOCAL_EDGES``.
        tet_edge_signs: +1 where the local pair order matches the global one.
        tet_faces: (N3, 4) global face opposite each local vertex.
        tet_face_signs: +1 where the sorted face normal points out of the tet.
        volumes: (N3,) positive tet volumes.
        face_tet_count: number of tets sharing each face (1 or 2).
    """

    vertices: np.ndarray
    tets: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    tet_edges: np.ndarray
    tet_edge_signs: np.ndarray
    tet_faces: np.ndarray
    tet_face_signs: np.ndarray
    volumes: np.ndarray
    face_tet_count: np.ndarray
    tags: np.ndarray | None = field(default=None)

    @property
    def N0(self) -> int:
        return len(self.vertices)

    @property
    def N1(self) -> int:
        return len(self.edges)

    @property
    def N2(self) -> int:
        return len(self.faces)

    @property
    def N3(self) -> int:
        return len(self.tets)

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return self.N0, self.N1, self.N2, self.N3

    @property
    def euler_characteristic(self) -> int:
        return self.N0 - self.N1 + self.N2 - self.N3

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())

    def centroids(self) -> np.ndarray:
        return self.vertices[self.tets].mean(axis=1)

    def edge_index(self, a: int, b: int) -> int:
        """Global index of the edge joining vertices ``a`` and ``b``."""
        lo, hi = min(a, b), max(a, b)
        key = lo * self.N0 + hi
        keys = self.edges[:, 0] * self.N0 + self.edges[:, 1]
        i = int(np.searchsorted(keys, key))
        if i >= len(keys) or keys[i] != key:
            raise KeyError((a, b))
        return i

    def find_vertex(self, point, tol: float = 1e-12) -> int:
        d = np.linalg.norm(self.vertices - np.asarray(point, dtype=float), axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise KeyError(f"no vertex within {tol} of {tuple(point)}")
        return i


def build_complex(vertices, tets, tags=None) -> SimplicialComplex:
    """Enumerate edges and faces of a tet mesh and fix tet orientation.

    Args:
        vertices: (N0, 3) coordinates.
        tets: (N3, 4) vertex indices in any order.
        tags: optional per-tet integer region tags (carried along).

    Raises:
        DegenerateTet: a tet has ``|volume| < 1e-30``.
        DanglingVertex: some vertex is used by no tet.
        NonManifoldFace: a face is shared by more than two tets.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    tets = np.array(tets, dtype=np.int64, copy=True)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise MeshError("vertices must be an (N, 3) array")
    if tets.ndim != 2 or tets.shape[1] != 4 or len(tets) == 0:
        raise MeshError("need at least one tet given as 4 vertex indices")
    if tets.min() < 0 or tets.max() >= len(vertices):
        raise MeshError("tet references a vertex index out of range")
    if np.any(np.diff(np.sort(tets, axis=1), axis=1) == 0):
        raise DegenerateTet("tet with repeated vertex")

    vol = signed_volumes(vertices, tets)
    bad = np.flatnonzero(np.abs(vol) < MIN_TET_VOLUME)
    if bad.size:
        raise DegenerateTet(f"tet {bad[0]} has volume {vol[bad[0]]:.3e} m^3")
    neg = vol < 0
    tets[neg] = tets[neg][:, [0, 1, 3, 2]]
    vol = np.abs(vol)

    used = np.zeros(len(vertices), dtype=bool)
    used[tets.ravel()] = True
    if not used.all():
        raise DanglingVertex(f"vertex {np.flatnonzero(~used)[0]} belongs to no tet")

    n3 = len(tets)
    loc_e = tets[:, LOCAL_EDGES]  # (N3, 6, 2)
    tet_edge_signs = np.where(loc_e[..., 0] < loc_e[..., 1], 1, -1).astype(np.int8)
    edges, tet_edges = np.unique(
        np.sort(loc_e.reshape(-1, 2), axis=1), axis=0, return_inverse=True
    )
    tet_edges = tet_edges.reshape(n3, 6)

    loc_f = tets[:, LOCAL_FACES]  # (N3, 4, 3)
    parity = _parity3(loc_f.reshape(-1, 3)).reshape(n3, 4)
    # induced boundary of a positive tet is sum_k (-1)^k [face omitting k]
    tet_face_signs = (parity * np.array([1, -1, 1, -1])).astype(np.int8)
    faces, tet_faces = np.unique(
        np.sort(loc_f.reshape(-1, 3), axis=1), axis=0, return_inverse=True
    )
    tet_faces = tet_faces.reshape(n3, 4)
    face_tet_count = np.bincount(tet_faces.ravel(), minlength=len(faces))
    if face_tet_count.max() > 2:
        f = int(np.argmax(face_tet_count))
        raise NonManifoldFace(f"face {tuple(faces[f])} shared by {face_tet_count[f]} tets")

    if tags is not None:
        tags = np.asarray(tags)
        if tags.shape != (n3,):
            raise MeshError("need one tag per tet")

    return SimplicialComplex(
        vertices=vertices,
        tets=tets,
        edges=edges.astype(np.int64),
        faces=faces.astype(np.int64),
        tet_edges=tet_edges.astype(np.int64),
        tet_edge_signs=tet_edge_signs,
        tet_faces=tet_faces.astype(np.int64),
        tet_face_signs=tet_face_signs,
        volumes=vol,
        face_tet_count=face_tet_count,
        tags=tags,
    )


@dataclass(frozen=True, eq=False)
class IncidenceSet:
    """Signed integer incidence matrices (CSR, int64).

    ``d0`` is N1 x N0 (gradient), ``d1`` is N2 x N1 (curl),
    ``d2`` is N3 x N2 (divergence).
    """

    d0: sp.csr_matrix
    d1: sp.csr_matrix
    d2: sp.csr_matrix


def build_incidence(cx: SimplicialComplex) -> IncidenceSet:
    n0, n1, n2, n3 = cx.counts
    rows = np.repeat(np.arange(n1), 2)
    d0 = sp.csr_matrix(
        (np.tile([-1, 1], n1), (rows, cx.edges.ravel())), shape=(n1, n0), dtype=np.int64
    )

    keys = cx.edges[:, 0] * n0 + cx.edges[:, 1]
    f = cx.faces
    ab = np.searchsorted(keys, f[:, 0] * n0 + f[:, 1])
    bc = np.searchsorted(keys, f[:, 1] * n0 + f[:, 2])
    ac = np.searchsorted(keys, f[:, 0] * n0 + f[:, 2])
    d1 = sp.csr_matrix(
        (
            np.tile([1, 1, -1], n2),
            (np.repeat(np.arange(n2), 3), np.column_stack([ab, bc, ac]).ravel()),
        ),
        shape=(n2, n1),
        dtype=np.int64,
    )

    d2 = sp.csr_matrix(
        (
            cx.tet_face_signs.astype(np.int64).ravel(),
            (np.repeat(np.arange(n3), 4), cx.tet_faces.ravel()),
        ),
        shape=(n3, n2),
        dtype=np.int64,
    )
    for m in (d0, d1, d2):
        m.sort_indices()
    return IncidenceSet(d0=d0, d1=d1, d2=d2)


@dataclass(frozen=True)
class ComplexReport:
    counts: tuple[int, int, int, int]
    curl_grad_residual: int
    div_curl_residual: int
    boundary_faces: int
    euler_characteristic: int
    volume: float

    def summary(self) -> str:
        n0, n1, n2, n3 = self.counts
        return (
            f"N0={n0} N1={n1} N2={n2} N3={n3}\n"
            f"boundary faces: {self.boundary_faces}\n"
            f"Euler characteristic: {self.euler_characteristic}\n"
            f"volume: {self.volume:.6e} m^3\n"
            f"|d1 d0|max={self.curl_grad_residual} |d2 d1|max={self.div_curl_residual}"
        )


def _max_abs(m: sp.spmatrix) -> int:
    m = m.tocsr()
    m.eliminate_zeros()
    return int(abs(m).max()) if m.nnz else 0


def validate_complex(cx: SimplicialComplex, inc: IncidenceSet) -> ComplexReport:
    """Check the exact chain identities and report topology counts.

    Raises:
        StructureViolation: ``d1 d0`` or ``d2 d1`` has a nonzero entry.
    """
    r10 = _max_abs(inc.d1 @ inc.d0)
    r21 = _max_abs(inc.d2 @ inc.d1)
    if r10 or r21:
        raise StructureViolation(f"d o d != 0 (|d1 d0|={r10}, |d2 d1|={r21})")
    return ComplexReport(
        counts=cx.counts,
        curl_grad_residual=r10,
        div_curl_residual=r21,
        boundary_faces=int(np.count_nonzero(cx.face_tet_count == 1)),
        euler_characteristic=cx.euler_characteristic,
        volume=cx.total_volume,
    )
