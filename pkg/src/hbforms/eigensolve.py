"""Eigenvalue problems and saddle-point solves.

Maxwell: the curl-curl problem and its two mixed forms, with zero counting
and spurious-mode detection. Stokes: the inf-sup constant of the
velocity/pressure pair and the lid-driven cavity solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import FACES, GeometryMap, assemble, divergence, integrate_basis, nitsche_load, vorticity
from .hierarchy import HierarchicalComplex


class NumericalError(RuntimeError):
    """Raised for numerically inconsistent input (non-SPD mass, negative inf-sup eigenvalue, ...)."""

    def __init__(self, msg, **diagnostics):
        super().__init__(msg)
        self.diagnostics = diagnostics


@dataclass
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray | None = field(default=None, repr=False)
    zero_tol: float = 1e-8

    @property
    def threshold(self) -> float:
        if len(self.values) == 0:
            return 0.0
        return self.zero_tol * float(np.max(np.abs(self.values)))

    @property
    def n_zeros(self) -> int:
        return int(np.sum(np.abs(self.values) < self.threshold))

    @property
    def nonzero(self) -> np.ndarray:
        return self.values[np.abs(self.values) >= self.threshold]


@dataclass
class SpuriousReport:
    matched: list[tuple[float, float, float]]
    spurious: list[int]                 # 1-based ranks in the computed list

    @property
    def spurious_free(self) -> bool:
        return not self.spurious


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def sym_gen_eig(A, M, zero_tol: float = 1e-8, vectors: bool = False) -> Spectrum:
    """All eigenpairs of A x = lambda M x (dense, Cholesky of M)."""
    A, M = _dense(A), _dense(M)
    try:
        L = la.cholesky(M, lower=True)
    except la.LinAlgError as e:
        raise NumericalError("mass matrix is not symmetric positive definite") from e
    if vectors:
        w, V = la.eigh(A, M)
        return Spectrum(w, V, zero_tol)
    # reduce with the Cholesky factor: L^-1 A L^-T
    X = la.solve_triangular(L, A, lower=True)
    C = la.solve_triangular(L, X.T, lower=True).T
    w = la.eigvalsh(0.5 * (C + C.T))
    return Spectrum(w, None, zero_tol)


def eig_residuals(A, M, spectrum: Spectrum) -> np.ndarray:
    A, M = _dense(A), _dense(M)
    V = spectrum.vectors
    R = A @ V - (M @ V) * spectrum.values
    return np.linalg.norm(R, axis=0)


def maxwell_primal(curlcurl, mass1, zero_tol=1e-8) -> Spectrum:
    return sym_gen_eig(curlcurl, mass1, zero_tol)


def maxwell_mixed_grad(curlcurl, mass1, grad_coupling, zero_tol=1e-8) -> Spectrum:
    """Curl-curl problem with the constraint (grad q, u) = 0 for all q.

    Restricted to the null space of ``grad_coupling^T``; zero eigenvalues
    count the discrete harmonic 1-forms.
    """
    G = _dense(grad_coupling)
    Z = la.null_space(G.T)
    A = Z.T @ _dense(curlcurl) @ Z
    M = Z.T @ _dense(mass1) @ Z
    return sym_gen_eig(A, M, zero_tol)


def maxwell_mixed_curl(curl_coupling, mass1, mass2, integrals2, zero_tol=1e-8) -> Spectrum:
    """(u, v) + (curl v, phi) = 0, (curl u, psi) = -lambda (phi, psi), phi, psi in W^2 / R.

    Eliminating u gives C M1^-1 C^T phi = lambda M2 phi on mean-zero phi.
    """
    C = _dense(curl_coupling)
    M1 = _dense(mass1)
    try:
        cf = la.cho_factor(M1)
    except la.LinAlgError as e:
        raise NumericalError("1-form mass matrix is not SPD") from e
    K = C @ la.cho_solve(cf, C.T)
    Q = la.null_space(np.asarray(integrals2, dtype=float)[None, :])
    return sym_gen_eig(Q.T @ K @ Q, Q.T @ _dense(mass2) @ Q, zero_tol)


def square_spectrum(n: int, side: float = np.pi) -> np.ndarray:
    """First n Maxwell eigenvalues of the square (0, side)^2 with multiplicity."""
    k = int(np.sqrt(n)) + 3
    vals = sorted((a * a + b * b) * (np.pi / side) ** 2 for a in range(k + 1) for b in range(k + 1) if a or b)
    return np.array(vals[:n])


def detect_spurious(computed, exact, n_first: int = 50, rel_tol: float = 0.02) -> SpuriousReport:
    """Greedy ascending match of computed to exact values within rel_tol.

    Every computed value among the first ``n_first`` either consumes the
    smallest unused exact value within tolerance or is flagged spurious.
    """
    comp = np.sort(np.asarray(computed, dtype=float))[:n_first]
    exact = list(np.sort(np.asarray(exact, dtype=float)))
    used = [False] * len(exact)
    matched, spurious = [], []
    for r, lam in enumerate(comp, start=1):
        hit = None
        for i, ex in enumerate(exact):
            if used[i]:
                continue
            if abs(lam - ex) <= rel_tol * abs(ex):
                hit = i
                break
            if ex > lam * (1 + rel_tol):
                break
        if hit is None:
            spurious.append(r)
        else:
            used[hit] = True
            matched.append((float(lam), float(exact[hit]), abs(lam - exact[hit]) / abs(exact[hit])))
    return SpuriousReport(matched, spurious)


# --- Stokes -----------------------------------------------------------------------

def _mean_zero_basis(f: np.ndarray) -> np.ndarray:
    return la.null_space(np.asarray(f, dtype=float)[None, :])


def infsup_constant(B, A, Mp, f) -> float:
    """beta = sqrt(min eig of B A^-1 B^T q = lambda Mp q) over q with f^T q = 0.

    ``f`` holds the integrals of the pressure basis, so the constraint
    removes the constant pressure.
    """
    B = sp.csc_matrix(B)
    try:
        lu = spla.splu(sp.csc_matrix(A))
    except RuntimeError as e:
        raise NumericalError("velocity Gram matrix is singular") from e
    Y = lu.solve(B.T.toarray())
    S = B @ Y
    S = 0.5 * (S + S.T)
    Q = _mean_zero_basis(f)
    w = sym_gen_eig(Q.T @ S @ Q, Q.T @ _dense(Mp) @ Q).values
    lam = w[0]
    if lam < -1e-10:
        raise NumericalError("negative inf-sup eigenvalue", lam=float(lam))
    return float(np.sqrt(max(lam, 0.0)))


def stokes_infsup(hc: HierarchicalComplex, geom: GeometryMap | None = None, cpen: float | None = None,
                  norm: str = "grad") -> float:
    """Inf-sup constant of the rotated complex (velocity 1-forms, pressure 2-forms).

    ``norm="grad"`` measures velocities by |grad v|^2 + cpen/h |v|^2 on the
    boundary; ``norm="sym"`` uses the symmetric gradient plus an h-weighted
    normal-flux term.
    """
    if hc.orientation != "rotated":
        raise ValueError("Stokes needs the rotated complex")
    if norm not in ("grad", "sym"):
        raise ValueError(f"unknown velocity norm {norm!r}")
    B = assemble("div_coupling", hc, geom).matrix
    A = assemble("vnorm_gram" if norm == "grad" else "vnorm_gram_sym", hc, geom, cpen=cpen).matrix
    Mp = assemble("mass_2", hc, geom).matrix
    f = integrate_basis(hc, 2, geom)
    return infsup_constant(B, A, Mp, f)


@dataclass
class StokesSolution:
    hc: HierarchicalComplex
    velocity: np.ndarray
    pressure: np.ndarray
    geom: GeometryMap

    def vorticity(self, points) -> np.ndarray:
        return vorticity(self.hc, self.velocity, points, self.geom)

    def divergence(self, points) -> np.ndarray:
        return divergence(self.hc, self.velocity, points, self.geom)


LID = {(1, 1): (1.0, 0.0)}


def stokes_solve(hc: HierarchicalComplex, lid: dict | None = None, geom: GeometryMap | None = None,
                 nu: float = 1.0, cpen: float | None = None) -> StokesSolution:
    """Stokes flow with strong zero normal velocity and Nitsche tangential data.

    ``lid`` maps faces (axis, side) to constant boundary velocities; the
    default drives the top face with u_B = (1, 0). The pressure is fixed by a
    mean-zero constraint through a Lagrange multiplier.
    """
    geom = geom or GeometryMap()
    lid = LID if lid is None else lid
    K = assemble("stokes_velocity", hc, geom, nu=nu, cpen=cpen).matrix
    B = assemble("div_coupling", hc, geom).matrix
    f = integrate_basis(hc, 2, geom)
    L = nitsche_load(hc, lid, geom, nu=nu, cpen=cpen)
    nu_, np_ = K.shape[0], B.shape[0]
    Zf = sp.csr_matrix(f[:, None])
    S = sp.bmat([[K, -B.T, None], [-B, None, Zf], [None, Zf.T, None]], format="csc")
    rhs = np.concatenate([-L, np.zeros(np_ + 1)])
    try:
        x = spla.splu(S).solve(rhs)
    except RuntimeError as e:
        raise NumericalError("singular Stokes system", n_velocity=nu_, n_pressure=np_) from e
    return StokesSolution(hc, x[:nu_], x[nu_ : nu_ + np_], geom)
