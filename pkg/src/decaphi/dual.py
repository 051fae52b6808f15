"""Centroid dual mesh: dual-cell volumes and dual incidence matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import IncidenceSet, SimplicialComplex, build_incidence


@dataclass(frozen=True, eq=False)
class DualMesh:
    """Metric data of the barycentric dual.

    ``dual_volumes[i]`` is the volume of the dual cell around primal node
    ``i``: a quarter of every incident tet. Boundary nodes get only the
    part of the cell that lies inside the mesh.
    """

    dual_node_coords: np.ndarray
    dual_volumes: np.ndarray
    d0_dual: sp.csr_matrix
    d1_dual: sp.csr_matrix
    d2_dual: sp.csr_matrix


def dual_incidence(inc: IncidenceSet) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """Return ``(d0_dual, d1_dual, d2_dual)`` from ``d_dual^(3-k) = (-1)^k d^(k-1)^T``.

    ``d0_dual`` (N2 x N3) maps dual nodes (tets) to dual edges (faces),
    ``d1_dual`` (N1 x N2) is the dual curl and ``d2_dual`` (N0 x N1) the
    dual divergence acting on fluxes through dual faces.
    """
    d0_dual = (-inc.d2.T).tocsr()
    d1_dual = inc.d1.T.tocsr()
    d2_dual = (-inc.d0.T).tocsr()
    return d0_dual, d1_dual, d2_dual


def build_dual(cx: SimplicialComplex, inc: IncidenceSet | None = None) -> DualMesh:
    if inc is None:
        inc = build_incidence(cx)
    vol = np.zeros(cx.N0)
    np.add.at(vol, cx.tets.ravel(), np.repeat(cx.volumes / 4.0, 4))
    d0_dual, d1_dual, d2_dual = dual_incidence(inc)
    return DualMesh(
        dual_node_coords=cx.centroids(),
        dual_volumes=vol,
        d0_dual=d0_dual,
        d1_dual=d1_dual,
        d2_dual=d2_dual,
    )
