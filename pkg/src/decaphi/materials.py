"""Material regions, frequency-dependent constitutive data and source cochains.

Time convention is ``exp(-i omega t)``: a conductor has
``eps(omega) = eps0 * eps_r + i sigma / omega`` with ``Im eps >= 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    ClosedPathWarning,
    EmptyPath,
    LossyMaterialInEigenproblem,
    MaterialError,
    NegativeConductivity,
    PortError,
    UncoveredTet,
    ZeroCurrent,
    ZeroFrequency,
)
from .mesh import SimplicialComplex, build_incidence

EPS0 = 8.8541878128e-12
MU0 = 1.25663706212e-6
C0 = 299792458.0

# Gauge constant; dimensionless so that chi = mu eps^2 is the classical Lorenz gauge.
DEFAULT_ALPHA = 1.0


@dataclass(frozen=True)
class Region:
    """One material region; later regions override earlier ones.

    A region selects tets either by an axis-aligned ``box``
    ``((xmin, ymin, zmin), (xmax, ymax, zmax))`` tested on tet centroids or
    by a mesh physical ``tag``.
    """

    name: str
    eps_r: float = 1.0
    sigma: float = 0.0
    mu_r: float = 1.0
    box: tuple | None = None
    tag: int | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise NegativeConductivity(f"region {self.name!r}: sigma = {self.sigma} < 0")
        if self.eps_r < 1e-6:
            raise MaterialError(f"region {self.name!r}: eps_r = {self.eps_r} < 1e-6")
        if self.mu_r <= 0:
            raise MaterialError(f"region {self.name!r}: mu_r = {self.mu_r} <= 0")

    def selects(self, cx: SimplicialComplex, centroids: np.ndarray) -> np.ndarray:
        if self.box is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.box)
            return np.all((centroids >= lo) & (centroids <= hi), axis=1)
        if self.tag is not None:
            if cx.tags is None:
                raise MaterialError(f"region {self.name!r} selects tag {self.tag} but mesh has no tags")
            return cx.tags == self.tag
        return np.ones(len(centroids), dtype=bool)


VACUUM = Region("vacuum")


@dataclass(frozen=True)
class TetMaterials:
    """Per-tet complex permittivity, real permeability and gauge coefficient."""

    eps: np.ndarray
    mu: np.ndarray
    chi: np.ndarray


@dataclass(frozen=True, eq=False)
class MaterialMap:
    """Frequency-independent per-tet material parameters."""

    eps_r: np.ndarray
    sigma: np.ndarray
    mu_r: np.ndarray
    region_index: np.ndarray
    regions: tuple[Region, ...]
    alpha: float = DEFAULT_ALPHA

    def eps(self, omega: float) -> np.ndarray:
        if omega <= 0:
            raise ZeroFrequency("materials need omega > 0")
        return EPS0 * self.eps_r + 1j * self.sigma / omega

    @property
    def mu(self) -> np.ndarray:
        return MU0 * self.mu_r

    def chi(self, omega: float) -> np.ndarray:
        return self.alpha * self.mu * self.eps(omega) ** 2

    def at(self, omega: float) -> TetMaterials:
        eps = self.eps(omega)
        return TetMaterials(eps=eps, mu=self.mu, chi=self.alpha * self.mu * eps**2)

    def lossless(self) -> TetMaterials:
        """Materials for eigenproblems; refuses conducting regions."""
        lossy = np.flatnonzero(self.sigma > 0)
        if lossy.size:
            name = self.regions[self.region_index[lossy[0]]].name
            raise LossyMaterialInEigenproblem(f"region {name!r} has sigma > 0")
        eps = EPS0 * self.eps_r
        return TetMaterials(eps=eps, mu=self.mu, chi=self.alpha * self.mu * eps**2)


def material_map(
    regions, cx: SimplicialComplex, alpha: float = DEFAULT_ALPHA, default: Region | None = VACUUM
) -> MaterialMap:
    """Assign each tet to the last region that selects it.

    Raises:
        UncoveredTet: no region selects some tet and ``default`` is None.
    """
    regions = list(regions)
    if default is not None:
        regions = [default] + regions
    cent = cx.centroids()
    owner = np.full(cx.N3, -1, dtype=np.int64)
    for i, reg in enumerate(regions):
        owner[reg.selects(cx, cent)] = i
    if np.any(owner < 0):
        raise UncoveredTet(f"tet {np.flatnonzero(owner < 0)[0]} belongs to no region")
    table = np.array([[r.eps_r, r.sigma, r.mu_r] for r in regions], dtype=float)
    p = table[owner]
    return MaterialMap(
        eps_r=p[:, 0], sigma=p[:, 1], mu_r=p[:, 2],
        region_index=owner, regions=tuple(regions), alpha=alpha,
    )


def resolve_materials(regions, cx: SimplicialComplex, omega: float, alpha: float = DEFAULT_ALPHA,
                      default: Region | None = VACUUM) -> TetMaterials:
    return material_map(regions, cx, alpha, default).at(omega)


@dataclass(frozen=True)
class PortSpec:
    """Delta-gap port: an open chain of primal edges carrying current ``I0``.

    ``vertices`` lists the chain in the direction of the impressed current;
    ``edges`` and ``signs`` give each step's global edge and whether the
    step agrees (+1) or disagrees (-1) with the edge orientation.
    """

    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    signs: tuple[int, ...]
    current: complex = 1.0

    @property
    def closed(self) -> bool:
        return len(self.vertices) > 2 and self.vertices[0] == self.vertices[-1]

    def reversed(self) -> "PortSpec":
        return PortSpec(
            vertices=self.vertices[::-1],
            edges=self.edges[::-1],
            signs=tuple(-s for s in self.signs[::-1]),
            current=self.current,
        )

    def path_vector(self, n1: int) -> np.ndarray:
        """Signed edge indicator of the chain (length N1)."""
        v = np.zeros(n1)
        np.add.at(v, np.asarray(self.edges, dtype=np.int64), np.asarray(self.signs, dtype=float))
        return v


def make_port(cx: SimplicialComplex, vertices, current: complex = 1.0) -> PortSpec:
    """Build a port from a vertex chain.

    Raises:
        EmptyPath: fewer than two vertices.
        PortError: consecutive vertices are not joined by a mesh edge.
        ZeroCurrent: ``current == 0``.
    """
    vertices = tuple(int(v) for v in vertices)
    if len(vertices) < 2:
        raise EmptyPath("port path needs at least one edge")
    if current == 0:
        raise ZeroCurrent("port current must be nonzero")
    edges, signs = [], []
    for a, b in zip(vertices[:-1], vertices[1:]):
        try:
            edges.append(cx.edge_index(a, b))
        except KeyError:
            raise PortError(f"vertices {a} and {b} are not joined by a mesh edge") from None
        signs.append(1 if a < b else -1)
    if len(set(edges)) != len(edges):
        raise PortError("port path visits an edge twice")
    return PortSpec(vertices, tuple(edges), tuple(signs), complex(current))


def port_from_points(cx: SimplicialComplex, points, current: complex = 1.0, tol: float = 1e-12) -> PortSpec:
    try:
        ids = [cx.find_vertex(p, tol) for p in points]
    except KeyError as err:
        raise PortError(str(err)) from None
    return make_port(cx, ids, current)


@dataclass(frozen=True)
class SourceCochains:
    """Impressed current (dual 2-cochain, N1) and charge (dual 3-cochain, N0)."""

    J: np.ndarray
    rho: np.ndarray
    omega: float = field(default=0.0)


def build_source(port: PortSpec, omega: float, cx: SimplicialComplex, d0: sp.spmatrix | None = None) -> SourceCochains:
    """Line-current source on the port chain with continuity-consistent charge."""
    if omega <= 0:
        raise ZeroFrequency("sources need omega > 0")
    if not port.edges:
        raise EmptyPath("port path has no edges")
    if port.current == 0:
        raise ZeroCurrent("port current must be nonzero")
    if d0 is None:
        d0 = build_incidence(cx).d0
    J = port.current * port.path_vector(cx.N1).astype(complex)
    rho = -(d0.T @ J) / (1j * omega)
    if port.closed:
        warnings.warn("closed port path: no charge is deposited", ClosedPathWarning, stacklevel=2)
    return SourceCochains(J=J, rho=rho, omega=omega)
