"""Structured box mesher, Gmsh MSH 4.1 import/export, CSV and VTK output."""

from __future__ import annotations

import csv
import io as _io
import logging
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path

import numpy as np

from .errors import IoFailure, MalformedSection, MeshError, NoTets, UnsupportedVersion
from .mesh import SimplicialComplex, build_complex

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoxMeshSpec:
    """Axis-aligned box split into ``nx * ny * nz`` hexes of 6 Kuhn tets.

    Every hex is cut along its (min corner, max corner) diagonal, so
    opposite boundary faces carry identical triangulations.
    """

    extents: tuple[float, float, float]
    cells: tuple[int, int, int]
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    symmetric: bool = True

    def __post_init__(self):
        if any(e <= 0 for e in self.extents):
            raise MeshError("box extents must be positive")
        if any(int(n) < 1 for n in self.cells):
            raise MeshError("need at least one cell per axis")


_UNIT = np.eye(3, dtype=np.int64)
# Kuhn simplices: walk from corner 000 to 111 adding one unit vector per step
KUHN = [
    [np.zeros(3, np.int64), _UNIT[p[0]], _UNIT[p[0]] + _UNIT[p[1]], np.ones(3, np.int64)]
    for p in permutations(range(3))
]


def generate_box_mesh(spec: BoxMeshSpec) -> SimplicialComplex:
    nx, ny, nz = (int(n) for n in spec.cells)
    axes = [
        np.linspace(o, o + e, n + 1)
        for o, e, n in zip(spec.origin, spec.extents, (nx, ny, nz))
    ]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    verts = np.column_stack([X.ravel(order="F"), Y.ravel(order="F"), Z.ravel(order="F")])

    def vid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    I, J, K = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    base = np.column_stack([I.ravel(order="F"), J.ravel(order="F"), K.ravel(order="F")])
    tets = []
    for corners in KUHN:
        t = [vid(*(base + c).T) for c in corners]
        tets.append(np.column_stack(t))
    # hex-major order: all 6 tets of a hex are adjacent
    tets = np.stack(tets, axis=1).reshape(-1, 4)
    return build_complex(verts, tets)


# -- Gmsh MSH 4.1 ASCII ------------------------------------------------------


def _sections(text: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if line.startswith("$") and not line.startswith("$End"):
            name = line[1:]
            body = []
            i += 1
            while i < len(lines) and lines[i].strip() != f"$End{name}":
                body.append(lines[i])
                i += 1
            if i >= len(lines):
                raise MalformedSection(name, "missing end marker")
            out[name] = body
        i += 1
    return out


def _ints(line: str, section: str) -> list[int]:
    try:
        return [int(v) for v in line.split()]
    except ValueError:
        raise MalformedSection(section, f"bad integer record {line!r}") from None


def _parse_entities(body: list[str]) -> dict[int, list[int]]:
    """Physical tags of each volume entity."""
    if not body:
        raise MalformedSection("Entities", "empty")
    counts = _ints(body[0], "Entities")
    if len(counts) != 4:
        raise MalformedSection("Entities", "header needs 4 counts")
    pos = 1 + counts[0] + counts[1] + counts[2]
    vol = {}
    for line in body[pos:pos + counts[3]]:
        f = line.split()
        try:
            tag = int(f[0])
            nphys = int(f[7])
            vol[tag] = [int(v) for v in f[8:8 + nphys]]
        except (ValueError, IndexError):
            raise MalformedSection("Entities", f"bad volume record {line!r}") from None
    if len(vol) != counts[3]:
        raise MalformedSection("Entities", "truncated volume list")
    return vol


def _parse_nodes(body: list[str]) -> tuple[np.ndarray, np.ndarray]:
    if not body:
        raise MalformedSection("Nodes", "empty")
    head = _ints(body[0], "Nodes")
    if len(head) != 4:
        raise MalformedSection("Nodes", "header needs 4 numbers")
    nblocks, nnodes = head[0], head[1]
    tags, coords = [], []
    pos = 1
    try:
        for _ in range(nblocks):
            blk = _ints(body[pos], "Nodes")
            n = blk[3]
            if blk[2] != 0:
                raise MalformedSection("Nodes", "parametric nodes not supported")
            pos += 1
            tags.extend(int(body[pos + i]) for i in range(n))
            pos += n
            coords.extend([float(v) for v in body[pos + i].split()[:3]] for i in range(n))
            pos += n
    except (IndexError, ValueError):
        raise MalformedSection("Nodes", "truncated node block") from None
    if len(tags) != nnodes:
        raise MalformedSection("Nodes", f"expected {nnodes} nodes, read {len(tags)}")
    xyz = np.array(coords, dtype=float).reshape(-1, 3)
    return np.array(tags, dtype=np.int64), xyz


def _parse_elements(body: list[str]):
    if not body:
        raise MalformedSection("Elements", "empty")
    head = _ints(body[0], "Elements")
    nblocks = head[0]
    tets, ents, skipped = [], [], 0
    pos = 1
    try:
        for _ in range(nblocks):
            dim, ent, etype, n = _ints(body[pos], "Elements")
            pos += 1
            rows = body[pos:pos + n]
            if len(rows) != n:
                raise IndexError
            pos += n
            if etype == 4:
                for r in rows:
                    v = _ints(r, "Elements")
                    if len(v) != 5:
                        raise MalformedSection("Elements", f"tet record {r!r}")
                    tets.append(v[1:])
                    ents.append(ent)
            else:
                skipped += n
    except (IndexError, ValueError):
        raise MalformedSection("Elements", "truncated element block") from None
    return tets, ents, skipped


def import_msh(path) -> SimplicialComplex:
    """Read tets and their region tags from a Gmsh MSH 4.1 ASCII file.

    Each tet is tagged with the first physical tag of its volume entity,
    or with the entity tag itself when the file has no ``$Entities``.
    Non-tet elements are skipped (counted in a log message) and nodes not
    used by any tet are dropped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise IoFailure(f"cannot read {path}: {err}") from None
    sec = _sections(text)
    fmt = sec.get("MeshFormat")
    if not fmt:
        raise MalformedSection("MeshFormat", "missing")
    parts = fmt[0].split()
    if len(parts) < 3:
        raise MalformedSection("MeshFormat", fmt[0])
    if parts[0] != "4.1":
        raise UnsupportedVersion(f"MSH version {parts[0]} (need 4.1)")
    if parts[1] != "0":
        raise UnsupportedVersion("binary MSH files are not supported")
    for name in ("Nodes", "Elements"):
        if name not in sec:
            raise MalformedSection(name, "missing")

    tags, xyz = _parse_nodes(sec["Nodes"])
    tets, ents, skipped = _parse_elements(sec["Elements"])
    if not tets:
        raise NoTets(f"{path} contains no 4-node tetrahedra")
    if skipped:
        log.warning("%s: ignored %d non-tet elements", path, skipped)
    phys = _parse_entities(sec["Entities"]) if "Entities" in sec else {}
    region = np.array([phys[e][0] if phys.get(e) else e for e in ents], dtype=np.int64)

    lookup = {int(t): i for i, t in enumerate(tags)}
    try:
        t = np.array([[lookup[v] for v in row] for row in tets], dtype=np.int64)
    except KeyError as err:
        raise MalformedSection("Elements", f"unknown node tag {err.args[0]}") from None
    used = np.unique(t)
    remap = np.full(len(xyz), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return build_complex(xyz[used], remap[t], tags=region)


def physical_names(path) -> dict[str, int]:
    sec = _sections(Path(path).read_text())
    out = {}
    for line in sec.get("PhysicalNames", [])[1:]:
        f = line.split(maxsplit=2)
        if len(f) == 3 and f[0] == "3":
            out[f[2].strip().strip('"')] = int(f[1])
    return out


def write_msh(cx: SimplicialComplex, path) -> None:
    """Write tets as MSH 4.1 ASCII, one volume entity per region tag."""
    tags = cx.tags if cx.tags is not None else np.ones(cx.N3, dtype=np.int64)
    uniq = np.unique(tags)
    buf = _io.StringIO()
    w = buf.write
    w("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
    w("$Entities\n")
    w(f"0 0 0 {len(uniq)}\n")
    lo, hi = cx.vertices.min(axis=0), cx.vertices.max(axis=0)
    for t in uniq:
        w(f"{t} {lo[0]!r} {lo[1]!r} {lo[2]!r} {hi[0]!r} {hi[1]!r} {hi[2]!r} 1 {t} 0\n")
    w("$EndEntities\n")
    n0 = cx.N0
    w(f"$Nodes\n1 {n0} 1 {n0}\n3 {uniq[0]} 0 {n0}\n")
    w("".join(f"{i + 1}\n" for i in range(n0)))
    w("".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in cx.vertices.tolist()))
    w("$EndNodes\n")
    w(f"$Elements\n{len(uniq)} {cx.N3} 1 {cx.N3}\n")
    eid = 1
    for t in uniq:
        sel = np.flatnonzero(tags == t)
        w(f"3 {t} 4 {len(sel)}\n")
        for row in cx.tets[sel] + 1:
            w(f"{eid} {row[0]} {row[1]} {row[2]} {row[3]}\n")
            eid += 1
    w("$EndElements\n")
    _write_text(path, buf.getvalue())


def _write_text(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as err:
        raise IoFailure(f"cannot write {path}: {err}") from None


# -- results -----------------------------------------------------------------

SWEEP_HEADER = ["freq_hz", "re_Z", "im_Z", "R", "L", "C", "residual"]
BANDS_HEADER = ["kx", "ky", "mode_index", "freq_hz"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{float(v):.12e}"


def sweep_rows(records) -> list[list[str]]:
    """CSV rows for sweep records, sorted by frequency.

    A record is a mapping with ``freq_hz`` and either a ``readout``
    (:class:`~decaphi.postprocess.PortReadout`) and ``residual``, or an
    ``error`` message for a failed point.
    """
    rows = []
    for rec in sorted(records, key=lambda r: r["freq_hz"]):
        ro = rec.get("readout")
        if ro is None:
            rows.append([_fmt(rec["freq_hz"]), "nan", "nan", "nan", "", "", f"failed: {rec['error']}"])
            continue
        rows.append([
            _fmt(rec["freq_hz"]), _fmt(ro.Z.real), _fmt(ro.Z.imag), _fmt(ro.R),
            _fmt(ro.L), _fmt(ro.C), _fmt(rec["residual"]),
        ])
    return rows


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def export_results(records, path) -> None:
    _write_text(path, _csv_text(SWEEP_HEADER, sweep_rows(records)))


def export_bands(rows, path) -> None:
    """``rows`` are ``(kx, ky, mode_index, freq_hz)`` tuples in k-path order."""
    out = [[_fmt(kx), _fmt(ky), str(int(m)), _fmt(f)] for kx, ky, m, f in rows]
    _write_text(path, _csv_text(BANDS_HEADER, out))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- legacy VTK field file ---------------------------------------------------


def write_field_file(path, cx: SimplicialComplex, phi, e_cell) -> None:
    """ASCII legacy VTK unstructured grid with Phi (re, im) on points and
    E_re / E_im vectors on cells. Values are written round-trip exact."""
    phi = np.asarray(phi, dtype=complex)
    e_cell = np.asarray(e_cell, dtype=complex)
    buf = _io.StringIO()
    w = buf.write
    w("# vtk DataFile Version 3.0\nA-Phi DEC field export\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    w(f"POINTS {cx.N0} double\n")
    w("".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in cx.vertices.tolist()))
    w(f"CELLS {cx.N3} {5 * cx.N3}\n")
    w("".join(f"4 {a} {b} {c} {d}\n" for a, b, c, d in cx.tets.tolist()))
    w(f"CELL_TYPES {cx.N3}\n")
    w("10\n" * cx.N3)
    w(f"POINT_DATA {cx.N0}\nSCALARS Phi double 2\nLOOKUP_TABLE default\n")
    w("".join(f"{a!r} {b!r}\n" for a, b in zip(phi.real.tolist(), phi.imag.tolist())))
    w(f"CELL_DATA {cx.N3}\n")
    for name, part in (("E_re", e_cell.real), ("E_im", e_cell.imag)):
        w(f"VECTORS {name} double\n")
        w("".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in part.tolist()))
    _write_text(path, buf.getvalue())


def read_field_file(path) -> dict[str, np.ndarray]:
    """Parse a file written by :func:`write_field_file`."""
    try:
        tokens = Path(path).read_text().split("\n")
    except OSError as err:
        raise IoFailure(f"cannot read {path}: {err}") from None
    out: dict[str, np.ndarray] = {}
    i = 0

    def block(n, width):
        nonlocal i
        rows = [[float(v) for v in tokens[i + k].split()] for k in range(n)]
        i += n
        return np.array(rows, dtype=float).reshape(n, width)

    npts = ncell = 0
    while i < len(tokens):
        line = tokens[i].split()
        i += 1
        if not line:
            continue
        key = line[0]
        if key == "POINTS":
            npts = int(line[1])
            out["points"] = block(npts, 3)
        elif key == "CELLS":
            ncell = int(line[1])
            out["cells"] = block(ncell, 5)[:, 1:].astype(np.int64)
        elif key == "CELL_TYPES":
            out["cell_types"] = block(ncell, 1)[:, 0].astype(np.int64)
        elif key == "SCALARS" and line[1] == "Phi":
            i += 1  # LOOKUP_TABLE
            v = block(npts, 2)
            out["Phi"] = v[:, 0] + 1j * v[:, 1]
        elif key == "VECTORS":
            out[line[1]] = block(ncell, 3)
    return out
