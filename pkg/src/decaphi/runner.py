"""Config-driven driven sweeps and band calculations."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import (
    SolveContext,
    assemble_A_system,
    assemble_Phi_system,
    assemble_pbc_eigen,
    solve_eigen,
    solve_linear,
)
from .boundary import BlochSpec, apply_pec, build_pbc_projection, classify_boundary, identity_map
from .config import RunConfig
from .errors import ConfigError, SolverError
from .io import generate_box_mesh, import_msh
from .materials import C0, MaterialMap, PortSpec, build_source, material_map, port_from_points
from .mesh import IncidenceSet, SimplicialComplex, build_incidence
from .postprocess import (
    FieldSolution,
    MaxwellReport,
    PortReadout,
    extract_port,
    recover_fields,
    recover_phi_from_gauge,
    scatter_solution,
    verify_maxwell,
)
from .whitney import assemble_hodges

log = logging.getLogger(__name__)

# eigenfrequencies below this fraction of the cell's light-crossing frequency are flagged
NEAR_ZERO_FRACTION = 1e-4


def load_mesh(cfg: RunConfig) -> SimplicialComplex:
    if cfg.msh is not None:
        return import_msh(cfg.msh)
    return generate_box_mesh(cfg.box)


@dataclass(frozen=True, eq=False)
class Problem:
    """Frequency-independent parts of a run."""

    cfg: RunConfig
    cx: SimplicialComplex
    inc: IncidenceSet
    materials: MaterialMap
    port: PortSpec | None
    pec_faces: tuple[str, ...]


def prepare(cfg: RunConfig, cx: SimplicialComplex | None = None) -> Problem:
    cx = load_mesh(cfg) if cx is None else cx
    inc = build_incidence(cx)
    mm = material_map(cfg.regions, cx, alpha=cfg.alpha)
    port = None
    if cfg.port is not None:
        port = port_from_points(cx, cfg.port.points, cfg.port.current, cfg.port.tol)
    faces = cfg.boundary.pec_faces if cfg.boundary.type in ("pec", "pbc") else ()
    return Problem(cfg=cfg, cx=cx, inc=inc, materials=mm, port=port, pec_faces=faces)


def _reduce(pb: Problem, hodges):
    if not pb.pec_faces:
        return identity_map(pb.cx, pb.inc, hodges)
    return apply_pec(pb.cx, pb.inc, hodges, classify_boundary(pb.cx, pb.inc), list(pb.pec_faces))


@dataclass(frozen=True, eq=False)
class PointResult:
    """One sweep point. ``error`` is set (and the rest is None) on failure."""

    freq_hz: float
    readout: PortReadout | None = None
    residual: float | None = None
    maxwell: MaxwellReport | None = None
    tandem_diff: float | None = None
    solution: FieldSolution | None = None
    error: str | None = None

    def record(self) -> dict:
        if self.error is not None:
            return {"freq_hz": self.freq_hz, "error": self.error}
        return {"freq_hz": self.freq_hz, "readout": self.readout, "residual": self.residual}


def solve_point(pb: Problem, freq_hz: float, tandem: bool = False, keep_fields: bool = False) -> PointResult:
    """Assemble and solve the gauged A system at one frequency.

    With ``tandem`` the scalar-potential system is also solved and its
    relative L2 distance to the gauge-recovered potential is reported.
    """
    if pb.port is None:
        raise ConfigError("driven solve needs a port")
    s = pb.cfg.solver
    omega = 2 * np.pi * freq_hz
    hodges = assemble_hodges(pb.cx, pb.materials.at(omega))
    rm = _reduce(pb, hodges)
    ri, rh = rm.incidence, rm.hodges
    src = build_source(pb.port, omega, pb.cx, pb.inc.d0)
    J = src.J[rm.keep_edges]
    rho = src.rho[rm.keep_nodes]
    ctx = SolveContext(omega=omega, tol=s.tol, method=s.method, maxiter=s.maxiter)
    try:
        res = solve_linear(assemble_A_system(ri, rh, omega, rmap=rm), J, ctx)
    except SolverError as err:
        return PointResult(freq_hz, error=str(err))
    phi = recover_phi_from_gauge(res.x, rh, ri, omega)
    sol = recover_fields(res.x, phi, ri, rh, omega)
    report = verify_maxwell(sol, ri, J, rho)

    diff = None
    if tandem:
        try:
            ps = solve_linear(assemble_Phi_system(ri, rh, omega, chi=s.phi_chi), -rho, ctx)
        except SolverError as err:
            return PointResult(freq_hz, error=f"tandem Phi: {err}")
        nrm = np.linalg.norm(ps.x)
        diff = float(np.linalg.norm(phi - ps.x) / nrm) if nrm else float(np.linalg.norm(phi))

    full = scatter_solution(sol, rm)
    return PointResult(
        freq_hz=freq_hz,
        readout=extract_port(full, pb.port),
        residual=res.residual,
        maxwell=report,
        tandem_diff=diff,
        solution=full if keep_fields else None,
    )


def run_sweep(pb: Problem, tandem: bool = False, threads: int = 1, keep_fields: bool = False) -> list[PointResult]:
    """Solve every configured frequency; results are in ascending frequency order."""
    freqs = sorted(pb.cfg.frequencies)

    def one(f):
        return solve_point(pb, f, tandem, keep_fields)

    if threads > 1 and len(freqs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(one, freqs))
    else:
        out = [one(f) for f in freqs]
    return out


@dataclass(frozen=True)
class BandRow:
    kx: float
    ky: float
    mode_index: int
    freq_hz: float
    near_zero: bool


def near_zero_threshold(cx: SimplicialComplex) -> float:
    ext = cx.vertices.max(axis=0) - cx.vertices.min(axis=0)
    return NEAR_ZERO_FRACTION * C0 / (2 * float(ext.max()))


def run_bands(pb: Problem, method: str = "auto") -> list[BandRow]:
    """Lowest eigenfrequencies of the Bloch problem at each configured k-point.

    Raises:
        LossyMaterialInEigenproblem: a region conducts.
        AsymmetricMesh: periodic boundaries do not match under translation.
    """
    b = pb.cfg.boundary
    hodges = assemble_hodges(pb.cx, pb.materials.lossless())
    rm = _reduce(pb, hodges)
    ext = pb.cx.vertices.max(axis=0) - pb.cx.vertices.min(axis=0)
    cut = near_zero_threshold(pb.cx)
    rows = []
    for kx, ky in b.k_points:
        bloch = BlochSpec(float(ext[0]), float(ext[1]), kx, ky)
        if b.kind == "A":
            P = build_pbc_projection(pb.cx, bloch, "edge", keep=rm.keep_edges)
            P_phi = None
            if len(rm.keep_nodes):
                P_phi = build_pbc_projection(pb.cx, bloch, "node", keep=rm.keep_nodes)
            K, M = assemble_pbc_eigen(rm.incidence, rm.hodges, P, "A", P_phi=P_phi)
        else:
            P = build_pbc_projection(pb.cx, bloch, "node", keep=rm.keep_nodes)
            K, M = assemble_pbc_eigen(rm.incidence, rm.hodges, P, "Phi")
        eig = solve_eigen(K, M, b.count, method=method)
        for i, f in enumerate(eig.frequencies):
            rows.append(BandRow(kx, ky, i, float(f), bool(f < cut)))
    return rows


def output_path(output_dir, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else Path(output_dir) / p
