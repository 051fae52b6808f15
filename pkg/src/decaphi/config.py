"""JSON run configuration.

Schema (keys not listed are rejected)::

    {
      "mesh": {"box": {"extents": [x, y, z], "cells": [nx, ny, nz], "origin": [0, 0, 0]}}
              or {"msh": "path/relative/to/config.msh"},
      "regions": [{"name": "cu", "sigma": 5.8e7, "eps_r": 1, "mu_r": 1,
                   "box": [[x0, y0, z0], [x1, y1, z1]]  or  "tag": 2}],
      "alpha": 1.0,
      "boundary": {"type": "pmc"}
                  or {"type": "pec", "faces": "outer" | ["xmin", ...]}
                  or {"type": "pbc", "pec": ["zmin", "zmax"], "k_points": [[kx, ky], ...],
                      "count": 4, "kind": "A" | "Phi"},
      "port": {"points": [[x, y, z], ...], "current": 1.0, "tol": 1e-12},
      "frequencies": [f1, f2, ...]  or  "sweep": {"start": f0, "stop": f1, "points_per_decade": n},
      "solver": {"method": "direct" | "gmres", "tol": 1e-10, "maxiter": 2000, "phi_chi": "diagonal"},
      "output": {"sweep_csv": "sweep.csv", "bands_csv": "bands.csv", "fields_prefix": "fields"}
    }

A ``port`` puts the run in driven mode (``solve``); ``boundary.type ==
"pbc"`` puts it in eigen mode (``bands``). The two are mutually exclusive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, IoFailure, ZeroCurrent
from .io import BoxMeshSpec
from .materials import DEFAULT_ALPHA, Region

_TOP_KEYS = {"mesh", "regions", "alpha", "boundary", "port", "frequencies", "sweep", "solver", "output"}
_FACE_NAMES = {"outer", "xmin", "xmax", "ymin", "ymax", "zmin", "zmax"}


@dataclass(frozen=True)
class PortConfig:
    points: tuple[tuple[float, float, float], ...]
    current: complex = 1.0
    tol: float = 1e-12


@dataclass(frozen=True)
class BoundaryConfig:
    type: str = "pmc"
    pec_faces: tuple[str, ...] = ()
    k_points: tuple[tuple[float, float], ...] = ()
    count: int = 4
    kind: str = "A"


@dataclass(frozen=True)
class SolverConfig:
    method: str = "direct"
    tol: float = 1e-10
    maxiter: int = 2000
    phi_chi: str = "diagonal"


@dataclass(frozen=True)
class OutputConfig:
    sweep_csv: str = "sweep.csv"
    bands_csv: str = "bands.csv"
    fields_prefix: str = "fields"


@dataclass(frozen=True)
class RunConfig:
    box: BoxMeshSpec | None
    msh: Path | None
    regions: tuple[Region, ...]
    boundary: BoundaryConfig
    port: PortConfig | None
    frequencies: tuple[float, ...]
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    alpha: float = DEFAULT_ALPHA

    @property
    def mode(self) -> str:
        return "eigen" if self.boundary.type == "pbc" else "driven"


def log_sweep(start: float, stop: float, points_per_decade: float) -> tuple[float, ...]:
    """Logarithmic frequency grid including both end points."""
    if not (0 < start <= stop):
        raise ConfigError(f"sweep needs 0 < start <= stop, got {start}, {stop}")
    if points_per_decade <= 0:
        raise ConfigError("points_per_decade must be positive")
    n = int(round(points_per_decade * np.log10(stop / start))) + 1
    if n == 1:
        return (float(start),)
    return tuple(float(f) for f in np.logspace(np.log10(start), np.log10(stop), n))


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


def _check_keys(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key {extra[0]!r}")


def _vec3(v, where: str) -> tuple[float, float, float]:
    try:
        out = tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected three numbers") from None
    if len(out) != 3:
        raise ConfigError(f"{where}: expected three numbers")
    return out


def _complex(v, where: str) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    try:
        return complex(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: not a number or [re, im] pair") from None


def _mesh(d, base: Path):
    _check_keys(d, {"box", "msh"}, "mesh")
    if ("box" in d) == ("msh" in d):
        raise ConfigError("mesh: give exactly one of 'box' and 'msh'")
    if "msh" in d:
        p = Path(d["msh"])
        return None, p if p.is_absolute() else base / p
    b = d["box"]
    _check_keys(b, {"extents", "cells", "origin"}, "mesh.box")
    ext = _vec3(_need(b, "extents", "mesh.box"), "mesh.box.extents")
    cells = _need(b, "cells", "mesh.box")
    if len(cells) != 3 or any(int(c) != c or c < 1 for c in cells):
        raise ConfigError("mesh.box.cells: expected three positive integers")
    if min(ext) <= 0:
        raise ConfigError("mesh.box.extents must be positive")
    origin = _vec3(b.get("origin", (0, 0, 0)), "mesh.box.origin")
    return BoxMeshSpec(ext, tuple(int(c) for c in cells), origin), None


def _region(d, i: int) -> Region:
    where = f"regions[{i}]"
    _check_keys(d, {"name", "eps_r", "sigma", "mu_r", "box", "tag"}, where)
    if "box" in d and "tag" in d:
        raise ConfigError(f"{where}: give at most one of 'box' and 'tag'")
    box = None
    if "box" in d:
        lo, hi = d["box"]
        box = (_vec3(lo, where + ".box"), _vec3(hi, where + ".box"))
    return Region(
        name=str(d.get("name", f"region{i}")),
        eps_r=float(d.get("eps_r", 1.0)),
        sigma=float(d.get("sigma", 0.0)),
        mu_r=float(d.get("mu_r", 1.0)),
        box=box,
        tag=int(d["tag"]) if "tag" in d else None,
    )


def _faces(v, where: str) -> tuple[str, ...]:
    names = (v,) if isinstance(v, str) else tuple(v)
    for n in names:
        if n not in _FACE_NAMES:
            raise ConfigError(f"{where}: unknown face selector {n!r}")
    return names


def _boundary(d) -> BoundaryConfig:
    _check_keys(d, {"type", "faces", "pec", "k_points", "count", "kind"}, "boundary")
    kind = d.get("type", "pmc")
    if kind == "pmc":
        _check_keys(d, {"type"}, "boundary (pmc)")
        return BoundaryConfig()
    if kind == "pec":
        _check_keys(d, {"type", "faces"}, "boundary (pec)")
        return BoundaryConfig(type="pec", pec_faces=_faces(d.get("faces", "outer"), "boundary.faces"))
    if kind == "pbc":
        _check_keys(d, {"type", "pec", "k_points", "count", "kind"}, "boundary (pbc)")
        pts = _need(d, "k_points", "boundary")
        try:
            kpts = tuple((float(k[0]), float(k[1])) for k in pts)
        except (TypeError, ValueError, IndexError):
            raise ConfigError("boundary.k_points: expected [kx, ky] pairs") from None
        if not kpts:
            raise ConfigError("boundary.k_points is empty")
        count = int(d.get("count", 4))
        if count < 1:
            raise ConfigError("boundary.count must be >= 1")
        ek = d.get("kind", "A")
        if ek not in ("A", "Phi"):
            raise ConfigError(f"boundary.kind must be 'A' or 'Phi', got {ek!r}")
        pec = _faces(d.get("pec", ()), "boundary.pec")
        if any(n[0] in "xy" or n == "outer" for n in pec):
            raise ConfigError("boundary.pec: only zmin/zmax may be PEC in a periodic run")
        return BoundaryConfig(type="pbc", pec_faces=pec, k_points=kpts, count=count, kind=ek)
    raise ConfigError(f"boundary.type must be pmc, pec or pbc, got {kind!r}")


def _port(d) -> PortConfig:
    _check_keys(d, {"points", "current", "tol"}, "port")
    pts = tuple(_vec3(p, "port.points") for p in _need(d, "points", "port"))
    if len(pts) < 2:
        raise ConfigError("port.points needs at least two points")
    cur = _complex(d.get("current", 1.0), "port.current")
    if cur == 0:
        raise ZeroCurrent("port.current must be nonzero")
    return PortConfig(points=pts, current=cur, tol=float(d.get("tol", 1e-12)))


def _frequencies(d) -> tuple[float, ...]:
    if "frequencies" in d and "sweep" in d:
        raise ConfigError("give either 'frequencies' or 'sweep', not both")
    if "sweep" in d:
        s = d["sweep"]
        _check_keys(s, {"start", "stop", "points_per_decade"}, "sweep")
        freqs = log_sweep(float(_need(s, "start", "sweep")), float(_need(s, "stop", "sweep")),
                          float(_need(s, "points_per_decade", "sweep")))
    else:
        freqs = tuple(float(f) for f in d.get("frequencies", ()))
    if any(not f > 0 for f in freqs):
        raise ConfigError("frequencies must be > 0")
    return tuple(sorted(set(freqs)))


def parse_config(d: dict, base: Path | str = ".") -> RunConfig:
    """Validate a decoded JSON document and build a :class:`RunConfig`.

    Raises:
        ConfigError: missing, unknown or contradictory settings.
    """
    _check_keys(d, _TOP_KEYS, "config")
    box, msh = _mesh(_need(d, "mesh", "config"), Path(base))
    regions = tuple(_region(r, i) for i, r in enumerate(d.get("regions", [])))
    boundary = _boundary(d.get("boundary", {"type": "pmc"}))
    port = _port(d["port"]) if "port" in d else None
    if port is not None and boundary.type == "pbc":
        raise ConfigError("a port (driven mode) cannot be combined with a periodic boundary (eigen mode)")
    freqs = _frequencies(d)
    if boundary.type == "pbc" and freqs:
        raise ConfigError("frequencies are not used in eigen mode")

    s = d.get("solver", {})
    _check_keys(s, {"method", "tol", "maxiter", "phi_chi"}, "solver")
    solver = SolverConfig(
        method=s.get("method", "direct"),
        tol=float(s.get("tol", 1e-10)),
        maxiter=int(s.get("maxiter", 2000)),
        phi_chi=s.get("phi_chi", "diagonal"),
    )
    if solver.method not in ("direct", "gmres"):
        raise ConfigError(f"solver.method must be direct or gmres, got {solver.method!r}")
    if solver.phi_chi not in ("diagonal", "galerkin"):
        raise ConfigError("solver.phi_chi must be diagonal or galerkin")
    if not solver.tol > 0:
        raise ConfigError("solver.tol must be positive")

    o = d.get("output", {})
    _check_keys(o, {"sweep_csv", "bands_csv", "fields_prefix"}, "output")
    output = OutputConfig(**{k: str(v) for k, v in o.items()})

    alpha = float(d.get("alpha", DEFAULT_ALPHA))
    if not alpha > 0:
        raise ConfigError("alpha must be positive")
    return RunConfig(box=box, msh=msh, regions=regions, boundary=boundary, port=port,
                     frequencies=freqs, solver=solver, output=output, alpha=alpha)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise IoFailure(f"cannot read config {path}: {err.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from None
    return parse_config(doc, path.parent)
