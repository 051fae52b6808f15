"""Field recovery, discrete Maxwell residuals and port impedance."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, ZeroCurrent, ZeroFrequency
from .io import write_field_file
from .materials import PortSpec
from .mesh import LOCAL_EDGES, IncidenceSet, SimplicialComplex
from .whitney import HodgeSet, frame_of


@dataclass(frozen=True, eq=False)
class FieldSolution:
    """Primal (A, Phi, E, B) and dual (D, H) cochains at one frequency."""

    A: np.ndarray
    Phi: np.ndarray
    E: np.ndarray
    B: np.ndarray
    D: np.ndarray
    H: np.ndarray
    omega: float
    provenance: str = "gauge"


def recover_phi_from_gauge(A, hodges: HodgeSet, inc: IncidenceSet, omega: float) -> np.ndarray:
    """Scalar potential from the discrete generalized Lorenz gauge."""
    if omega <= 0:
        raise ZeroFrequency("gauge recovery divides by omega")
    div_epsA = -(inc.d0.T @ (hodges.star_eps1 @ A))
    return hodges.star_chi_inv3_diag * div_epsA / (1j * omega)


def recover_fields(A, Phi, inc: IncidenceSet, hodges: HodgeSet, omega: float,
                   provenance: str = "gauge") -> FieldSolution:
    A = np.asarray(A)
    Phi = np.asarray(Phi)
    if A.shape != (inc.d0.shape[0],) or Phi.shape != (inc.d0.shape[1],):
        raise DimensionMismatch("A or Phi does not match d0")
    E = 1j * omega * A - inc.d0 @ Phi
    B = inc.d1 @ A
    return FieldSolution(
        A=A, Phi=Phi, E=E, B=B,
        D=hodges.star_eps1 @ E,
        H=hodges.star_mu_inv2 @ B,
        omega=omega, provenance=provenance,
    )


@dataclass(frozen=True)
class MaxwellReport:
    faraday: float
    ampere: float
    gauss: float
    div_b: float

    def __str__(self):
        return (f"faraday={self.faraday:.3e} ampere={self.ampere:.3e} "
                f"gauss={self.gauss:.3e} divB={self.div_b:.3e}")


def _rel(r, ref) -> float:
    n = np.linalg.norm(ref)
    return float(np.linalg.norm(r) / n) if n else float(np.linalg.norm(r))


def verify_maxwell(sol: FieldSolution, inc: IncidenceSet, J, rho) -> MaxwellReport:
    """Residuals of the four discrete Maxwell equations.

    Faraday and div-B are absolute maxima (structurally zero); Ampere and
    Gauss are relative to the source norms.
    """
    w = sol.omega
    far = inc.d1 @ sol.E - 1j * w * sol.B
    amp = inc.d1.T @ sol.H + 1j * w * sol.D - J
    gau = -(inc.d0.T @ sol.D) - rho
    return MaxwellReport(
        faraday=float(np.max(np.abs(far), initial=0.0)),
        ampere=_rel(amp, J),
        gauss=_rel(gau, rho),
        div_b=float(np.max(np.abs(inc.d2 @ sol.B), initial=0.0)),
    )


def scatter_solution(sol: FieldSolution, rmap) -> FieldSolution:
    """Embed a reduced (PEC) solution into full-mesh cochains, zero-filled."""
    return replace(
        sol,
        A=rmap.scatter_edges(sol.A),
        Phi=rmap.scatter_nodes(sol.Phi),
        E=rmap.scatter_edges(sol.E),
        B=rmap.scatter_faces(sol.B),
        D=rmap.scatter_edges(sol.D),
        H=rmap.scatter_faces(sol.H),
    )


@dataclass(frozen=True)
class PortReadout:
    """Two-terminal readout; ``Z = R - i omega L`` for an inductive port.

    Exactly one of ``L`` and ``C`` is set, by the sign of ``Im Z``.
    """

    freq_hz: float
    V: complex
    I0: complex
    Z: complex
    R: float
    L: float | None
    C: float | None


def readout(freq_hz: float, V: complex, I0: complex) -> PortReadout:
    if I0 == 0:
        raise ZeroCurrent("port current is zero")
    omega = 2 * np.pi * freq_hz
    Z = complex(V / I0)
    if Z.imag > 0:
        L, C = None, 1.0 / (omega * Z.imag)
    else:
        L, C = -Z.imag / omega, None
    return PortReadout(freq_hz=freq_hz, V=complex(V), I0=complex(I0), Z=Z, R=Z.real, L=L, C=C)


def extract_port(sol: FieldSolution, port: PortSpec) -> PortReadout:
    """Gap voltage ``V = -sum(E)`` along the port chain and ``Z = V / I0``.

    ``sol`` must be indexed on the full mesh (see :func:`scatter_solution`).
    """
    V = -np.dot(port.path_vector(len(sol.E)), sol.E)
    return readout(sol.omega / (2 * np.pi), V, port.current)


def centroid_fields(sol: FieldSolution, cx: SimplicialComplex) -> np.ndarray:
    """Whitney-interpolated E at every tet centroid, shape (N3, 3) complex."""
    g = frame_of(cx).grads
    i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
    # at the centroid all barycentrics are 1/4
    w = 0.25 * (g[:, j] - g[:, i]) * cx.tet_edge_signs[:, :, None]
    e = sol.E[cx.tet_edges]
    return np.einsum("te,tek->tk", e, w)


def export_fields(sol: FieldSolution, cx: SimplicialComplex, path) -> None:
    write_field_file(path, cx, sol.Phi, centroid_fields(sol, cx))
