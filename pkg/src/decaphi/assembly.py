"""Discrete A and Phi systems, Bloch eigenproblems and their solvers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    LossyMaterialInEigenproblem,
    SingularSystem,
    ToleranceNotReached,
)
from .mesh import IncidenceSet
from .whitney import HodgeSet

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    matrix: sp.csr_matrix
    kind: str  # "edge" or "node"
    symmetric: bool = True
    rmap: object = None

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True)
class SolveContext:
    """Linear-solver settings.

    ``method`` is ``"direct"`` (sparse LU) or ``"gmres"`` (Jacobi
    preconditioned). ``refine`` bounds the iterative-refinement sweeps of
    the direct path.
    """

    omega: float = 0.0
    tol: float = 1e-10
    method: str = "direct"
    maxiter: int = 2000
    refine: int = 3


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    residual: float
    converged: bool
    method: str
    iterations: int = 0


def _check_dims(inc: IncidenceSet, h: HodgeSet):
    n1, n0 = inc.d0.shape
    n2 = inc.d1.shape[0]
    if inc.d1.shape[1] != n1:
        raise DimensionMismatch(f"d1 has {inc.d1.shape[1]} columns, d0 has {n1} rows")
    if h.star_eps1.shape != (n1, n1) or h.star_mu_inv2.shape != (n2, n2):
        raise DimensionMismatch("Hodge stars do not match the incidence matrices")
    if h.star_chi0_diag.shape != (n0,) or h.star_chi0_galerkin.shape != (n0, n0):
        raise DimensionMismatch("chi Hodge does not match d0")


def _sym(m: sp.spmatrix) -> sp.csr_matrix:
    m = ((m + m.T) * 0.5).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def curl_curl(inc: IncidenceSet, h: HodgeSet) -> sp.csr_matrix:
    d1 = inc.d1.astype(float)
    return _sym(d1.T @ h.star_mu_inv2 @ d1)


def gauge_term(inc: IncidenceSet, h: HodgeSet) -> sp.csr_matrix:
    """``star_eps d0 star_chi^-1 d0^T star_eps`` with the diagonal chi inverse."""
    g = h.star_eps1 @ inc.d0.astype(float)
    return _sym(g @ sp.diags(h.star_chi_inv3_diag) @ g.T)


def assemble_A_system(inc: IncidenceSet, h: HodgeSet, omega: float, gauge: bool = True, rmap=None) -> SystemMatrix:
    """Vector-potential system ``curl mu^-1 curl - omega^2 eps + gauge``.

    With ``gauge=False`` the plain curl-curl operator is returned, which
    is singular at low frequency; it exists only for comparison.
    """
    _check_dims(inc, h)
    m = curl_curl(inc, h) - omega**2 * h.star_eps1
    if gauge:
        m = m + gauge_term(inc, h)
    return SystemMatrix(matrix=_sym(m), kind="edge", rmap=rmap)


def assemble_Phi_system(inc: IncidenceSet, h: HodgeSet, omega: float, chi: str = "galerkin", rmap=None) -> SystemMatrix:
    """Scalar-potential system ``-d0^T eps d0 + omega^2 chi``; right side is ``-rho``."""
    _check_dims(inc, h)
    d0 = inc.d0.astype(float)
    m = -(d0.T @ h.star_eps1 @ d0) + omega**2 * h.chi0(chi)
    return SystemMatrix(matrix=_sym(m), kind="node", rmap=rmap)


def _residual(a, x, b) -> float:
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a @ x - b) / nb) if nb else float(np.linalg.norm(a @ x))


def _lu_gmres(a, b, x0, lu, s, ctx):
    pre = spla.LinearOperator(a.shape, matvec=lambda v: s * lu.solve(s * v), dtype=a.dtype)
    counter = {"n": 0}

    def cb(_):
        counter["n"] += 1

    x, _ = spla.gmres(a, b, x0=x0, rtol=ctx.tol * 0.1, atol=0.0, restart=50, maxiter=4,
                      M=pre, callback=cb, callback_type="pr_norm")
    return x, counter["n"]


def factorize(a: sp.spmatrix):
    """Equilibrated sparse LU: returns ``(lu, s)`` with ``a^-1 = S lu^-1 S``.

    Raises:
        SingularSystem: an exactly zero pivot.
    """
    # symmetric diagonal scaling keeps pivots comparable when conductor and
    # air entries differ by many orders of magnitude
    dd = np.abs(a.diagonal())
    s = np.where(dd > 0, 1.0 / np.sqrt(np.where(dd > 0, dd, 1.0)), 1.0)
    scaled = (sp.diags(s) @ a @ sp.diags(s)).tocsc()
    try:
        # the systems are structurally symmetric; a symmetric ordering with
        # relaxed pivoting gives a far more accurate factor than COLAMD here
        lu = spla.splu(scaled, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.1,
                       options=dict(SymmetricMode=True))
    except RuntimeError as err:
        raise SingularSystem(str(err)) from None
    return lu, s


def _solve_direct(a, b, ctx: SolveContext):
    """LU solve with iterative refinement and an LU-preconditioned GMRES
    fallback when refinement stalls."""
    lu, s = factorize(a)
    x = s * lu.solve(s * b)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("LU solve produced non-finite values")
    res = _residual(a, x, b)
    sweeps = 0
    while res > ctx.tol and sweeps < ctx.refine:
        trial = x + s * lu.solve(s * (b - a @ x))
        sweeps += 1
        r_trial = _residual(a, trial, b)
        if not r_trial < res:
            break
        x, res = trial, r_trial
    if res > ctx.tol:
        trial, its = _lu_gmres(a, b, x, lu, s, ctx)
        sweeps += its
        r_trial = _residual(a, trial, b)
        if r_trial < res:
            x, res = trial, r_trial
    return x, res, sweeps


def solve_linear(system, rhs, ctx: SolveContext = SolveContext()) -> SolveResult:
    """Solve ``M x = b`` to relative residual ``ctx.tol``.

    Raises:
        SingularSystem: the LU factorization hits an exactly zero pivot.
        ToleranceNotReached: the residual stays above tolerance; the
            exception carries the best iterate.
    """
    a = system.matrix if isinstance(system, SystemMatrix) else sp.csr_matrix(system)
    b = np.asarray(rhs)
    if a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"system {a.shape} vs rhs {b.shape}")
    dtype = np.result_type(a.dtype, b.dtype, float)
    if not np.any(b):
        return SolveResult(np.zeros(b.shape, dtype=dtype), 0.0, True, ctx.method)
    a = a.astype(dtype)
    b = b.astype(dtype)

    if ctx.method == "direct":
        x, res, sweeps = _solve_direct(a, b, ctx)
    elif ctx.method == "gmres":
        d = a.diagonal()
        d = np.where(d == 0, 1.0, d)
        pre = spla.LinearOperator(a.shape, matvec=lambda v: v / d, dtype=dtype)
        counter = {"n": 0}

        def cb(_):
            counter["n"] += 1

        x, info = spla.gmres(a, b, rtol=ctx.tol, atol=0.0, restart=200, maxiter=ctx.maxiter,
                             M=pre, callback=cb, callback_type="pr_norm")
        res = _residual(a, x, b)
        sweeps = counter["n"]
    else:
        raise ValueError(f"unknown solver {ctx.method!r}")

    if res > ctx.tol:
        raise ToleranceNotReached(f"relative residual {res:.3e} > {ctx.tol:.1e}", x=x, residual=res)
    return SolveResult(x=x, residual=res, converged=True, method=ctx.method, iterations=sweeps)


@dataclass
class EigenResult:
    """Generalized eigenpairs sorted by ascending ``omega2``."""

    omega2: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    k: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def frequencies(self) -> np.ndarray:
        """Eigenfrequencies in Hz (negative round-off clipped to zero)."""
        return np.sqrt(np.clip(self.omega2.real, 0.0, None)) / (2 * np.pi)


def _require_lossless(h: HodgeSet):
    for name in ("star_eps1", "star_chi0_galerkin"):
        m = getattr(h, name)
        if np.iscomplexobj(m.data) and np.any(m.data.imag):
            raise LossyMaterialInEigenproblem(f"{name} is complex; eigenproblems need lossless media")


def _herm(m: sp.spmatrix) -> sp.csr_matrix:
    m = ((m + m.conj().T) * 0.5).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def assemble_pbc_eigen(inc: IncidenceSet, h: HodgeSet, P: sp.spmatrix, kind: str = "A",
                       P_phi: sp.spmatrix | None = None, chi: str = "galerkin"):
    """Bloch-projected stiffness and mass matrices ``(K, M)``.

    For ``kind="A"`` the gauge term divides by the dual volumes of the
    *identified* nodes: the node projection ``P_phi`` merges the two half
    cells of each periodic node before the diagonal chi star is inverted.
    Without ``P_phi`` each boundary half cell is inverted on its own.
    """
    _check_dims(inc, h)
    _require_lossless(h)
    P = sp.csr_matrix(P)
    d0 = inc.d0.astype(float)
    if kind == "A":
        eps = h.star_eps1.real
        k0 = curl_curl(inc, h).real
        K = P.conj().T @ k0 @ P
        g = eps @ d0
        chi_d = h.star_chi0_diag.real
        if P_phi is None:
            K = K + P.conj().T @ (g @ sp.diags(1.0 / chi_d) @ g.T) @ P
        else:
            P_phi = sp.csr_matrix(P_phi)
            vol = (P_phi.conj().T @ sp.diags(chi_d) @ P_phi).diagonal().real
            gp = P.conj().T @ g @ P_phi
            K = K + gp @ sp.diags(1.0 / vol) @ gp.conj().T
        M = P.conj().T @ eps @ P
    elif kind == "Phi":
        K = P.conj().T @ (d0.T @ h.star_eps1.real @ d0) @ P
        M = P.conj().T @ h.chi0(chi).real @ P
    else:
        raise ValueError(f"unknown eigenproblem kind {kind!r}")
    return _herm(K), _herm(M)


def _relative_residuals(K, M, lam, V) -> np.ndarray:
    out = np.empty(len(lam))
    knorm = spla.norm(K, 1) if sp.issparse(K) else np.linalg.norm(K, 1)
    for i, (l, v) in enumerate(zip(lam, V.T)):
        kv = K @ v
        r = kv - l * (M @ v)
        den = np.linalg.norm(kv)
        if den <= 1e-12 * knorm * np.linalg.norm(v):
            den = knorm * np.linalg.norm(v)
        out[i] = np.linalg.norm(r) / den if den else np.linalg.norm(r)
    return out


def solve_eigen(K, M, count: int, shift: float = 0.0, tol: float = 1e-8, method: str = "auto",
                dense_limit: int = 1500) -> EigenResult:
    """``count`` eigenpairs of ``K v = w M v`` nearest ``shift``.

    Small problems use a dense Hermitian solver; larger ones use ARPACK in
    shift-invert mode.

    Raises:
        ConvergenceFailure: ARPACK fails or a residual exceeds ``tol``.
    """
    n = K.shape[0]
    count = min(count, n)
    if count <= 0:
        return EigenResult(np.zeros(0), np.zeros((n, 0)), np.zeros(0))
    if method == "auto":
        method = "dense" if n <= dense_limit else "arpack"
    if method == "dense":
        kd = K.toarray() if sp.issparse(K) else np.asarray(K)
        md = M.toarray() if sp.issparse(M) else np.asarray(M)
        try:
            lam, vec = sla.eigh(kd, md)
        except (np.linalg.LinAlgError, ValueError) as err:
            raise ConvergenceFailure(str(err)) from None
        pick = np.argsort(np.abs(lam - shift), kind="stable")[:count]
        lam, vec = lam[pick], vec[:, pick]
    elif method == "arpack":
        if count >= n - 1:
            return solve_eigen(K, M, count, shift, tol, "dense")
        try:
            lam, vec = spla.eigsh(sp.csc_matrix(K), k=count, M=sp.csc_matrix(M), sigma=shift,
                                  which="LM", tol=1e-12)
        except (spla.ArpackError, spla.ArpackNoConvergence, RuntimeError) as err:
            raise ConvergenceFailure(str(err)) from None
        lam = lam.real
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    order = np.argsort(lam, kind="stable")
    lam, vec = lam[order], vec[:, order]
    res = _relative_residuals(K, M, lam, vec)
    if np.any(res > tol):
        raise ConvergenceFailure(f"eigen residual {res.max():.2e} > {tol:.0e}")
    return EigenResult(omega2=lam, vectors=vec, residuals=res)


def smallest_singular_value(a: sp.spmatrix) -> float:
    """``sigma_min`` of a nonsingular sparse matrix via its LU-applied inverse."""
    a = sp.csc_matrix(a)
    dtype = np.result_type(a.dtype, float)
    lu, s = factorize(a.astype(dtype))
    n = a.shape[0]
    op = spla.LinearOperator(
        (n, n),
        matvec=lambda v: s * lu.solve(s * np.asarray(v, dtype=dtype).ravel()),
        rmatvec=lambda v: s * lu.solve(s * np.asarray(v, dtype=dtype).ravel(), trans="H"),
        dtype=dtype,
    )
    sv = spla.svds(op, k=1, which="LM", return_singular_vectors=False, tol=1e-10, random_state=0)
    return float(1.0 / sv[0])


def largest_singular_value(a: sp.spmatrix) -> float:
    s = spla.svds(sp.csc_matrix(a), k=1, which="LM", return_singular_vectors=False, tol=1e-10,
                  random_state=0)
    return float(s[0])
