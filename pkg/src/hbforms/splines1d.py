"""Univariate B-splines on open knot vectors.

Knots are stored as exact :class:`fractions.Fraction` values so that
nestedness checks and two-scale (knot insertion) matrices are exact.
Floating point copies are used for evaluation only.

Indices are 0-based throughout: ``B_i`` uses the local knots
``knots[i : i + p + 2]`` and the Curry-Schoenberg function ``D_j`` uses
``knots[j + 1 : j + p + 2]`` (degree ``p - 1``), so that

    B_i' = D_{i-1} - D_i,     with D_{-1} = D_{m-1} = 0.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .sparse import SignedSparseMatrix


@dataclass(frozen=True)
class KnotVector:
    degree: int
    knots: tuple[Fraction, ...]
    # derived spaces may be discontinuous (multiplicity degree + 1)
    discontinuous: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        p = self.degree
        kn = tuple(Fraction(k) for k in self.knots)
        object.__setattr__(self, "knots", kn)
        if p < 0:
            raise ValueError("degree must be non-negative")
        if len(kn) < 2 * (p + 1):
            raise ValueError("too few knots for an open knot vector")
        if any(b < a for a, b in zip(kn, kn[1:])):
            raise ValueError("knots must be non-decreasing")
        if any(k != 0 for k in kn[: p + 1]) or any(k != 1 for k in kn[-(p + 1):]):
            raise ValueError("knot vector must be open on [0, 1]")
        interior = kn[p + 1 : -(p + 1)]
        for k, mult in Counter(interior).items():
            if k <= 0 or k >= 1:
                raise ValueError("interior knots must lie in (0, 1)")
            if mult > (p + 1 if self.discontinuous else max(p, 1)):
                raise ValueError(f"interior knot {k} has multiplicity > degree")

    @property
    def m(self) -> int:
        """Number of basis functions."""
        return len(self.knots) - self.degree - 1

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([float(k) for k in self.knots])

    @cached_property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return tuple(sorted(set(self.knots)))

    @property
    def n_elems(self) -> int:
        return len(self.breakpoints) - 1

    def derived(self) -> "KnotVector":
        """The knot vector ``Xi'`` (first and last knot removed), degree p - 1."""
        if self.degree < 1:
            raise ValueError("derived space needs degree >= 1")
        return self._derived

    @cached_property
    def _derived(self) -> "KnotVector":
        return KnotVector(self.degree - 1, self.knots[1:-1], discontinuous=True)

    @cached_property
    def _cs_scale(self) -> np.ndarray:
        return np.array([float(s) for s in curry_schoenberg_scale_exact(self)])

    def support_elements(self, i: int) -> tuple[int, int]:
        """Inclusive element-index range of the open support of ``B_i``."""
        bp = self.breakpoints
        lo = bp.index(self.knots[i])
        hi = bp.index(self.knots[i + self.degree + 1])
        return lo, hi - 1

    def contains(self, other: "KnotVector") -> bool:
        """True if ``other``'s knots are a sub-multiset of ours (same degree)."""
        if other.degree != self.degree:
            return False
        pool = list(self.knots)
        for k in other.knots:
            try:
                pool.remove(k)
            except ValueError:
                return False
        return True


@dataclass
class BasisEval:
    """Nonzero basis functions at one point.

    ``values[d, a]`` is the d-th derivative of function ``indices[a]``.
    """
    indices: np.ndarray
    values: np.ndarray = field(repr=False)


def make_uniform_open_knots(p: int, n_elems: int) -> KnotVector:
    if p < 1:
        raise ValueError("degree must be >= 1")
    if n_elems < 1:
        raise ValueError("need at least one element")
    inner = [Fraction(j, n_elems) for j in range(1, n_elems)]
    return KnotVector(p, tuple([Fraction(0)] * (p + 1) + inner + [Fraction(1)] * (p + 1)))


def find_span(kv: KnotVector, x: float) -> int:
    """Knot span index s with knots[s] <= x < knots[s+1] (left limit at x=1)."""
    U = kv.array
    p = kv.degree
    if x >= U[-1]:
        # last nonempty span
        return kv.m - 1
    s = int(np.searchsorted(U, x, side="right")) - 1
    return min(max(s, p), kv.m - 1)


def _basis_ders(U: np.ndarray, p: int, s: int, x: float, n: int) -> np.ndarray:
    # The NURBS Book, A2.3
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - U[s + 1 - j]
        right[j] = U[s + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved
    ders = np.zeros((n + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, n + 1):
        ders[k] *= fac
        fac *= p - k
    return ders


def eval_basis(kv: KnotVector, x: float, max_deriv: int = 0) -> BasisEval:
    """Values and derivatives of the nonzero ``B_{i,p}`` at ``x``.

    Right-continuous at knots, except at ``x = 1`` where the left limit is used.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    p = kv.degree
    s = find_span(kv, x)
    ders = _basis_ders(kv.array, p, s, x, max_deriv)
    idx = np.arange(s - p, s + 1)
    return BasisEval(idx, ders)


def curry_schoenberg_scale(kv: KnotVector) -> np.ndarray:
    """Factors ``p / (xi_{j+p+1} - xi_{j+1})`` turning degree p-1 B-splines on Xi' into D_j."""
    return kv._cs_scale.copy()


def curry_schoenberg_scale_exact(kv: KnotVector) -> list[Fraction]:
    p, U = kv.degree, kv.knots
    out = []
    for j in range(kv.m - 1):
        span = U[j + p + 1] - U[j + 1]
        if span == 0:
            raise ZeroDivisionError(f"zero-length local knot span for D_{j}")
        out.append(Fraction(p) / span)
    return out


def curry_schoenberg_eval(kv: KnotVector, x: float, max_deriv: int = 0) -> BasisEval:
    """The ``m - 1`` normalized functions D_{j,p-1} of the parent space ``kv``."""
    der = kv.derived()
    ev = eval_basis(der, x, max_deriv)
    scale = curry_schoenberg_scale(kv)
    return BasisEval(ev.indices, ev.values * scale[ev.indices])


def greville_sites(kv: KnotVector) -> np.ndarray:
    p = kv.degree
    if p < 1:
        raise ValueError("Greville sites need degree >= 1")
    U = kv.knots
    return np.array([float(sum(U[i + 1 : i + p + 1]) / p) for i in range(kv.m)])


def greville_sites_exact(kv: KnotVector) -> list[Fraction]:
    p, U = kv.degree, kv.knots
    return [sum(U[i + 1 : i + p + 1], Fraction(0)) / p for i in range(kv.m)]


def insert_knot(U: Sequence[Fraction], p: int, t: Fraction) -> tuple[list[Fraction], SignedSparseMatrix]:
    """Boehm's single-knot insertion; returns the new knots and R with old = R @ new."""
    U = list(U)
    m = len(U) - p - 1
    k = max(i for i in range(len(U) - 1) if U[i] <= t < U[i + 1])
    trip = []
    for j in range(m + 1):
        if j <= k - p:
            alpha = Fraction(1)
        elif j >= k + 1:
            alpha = Fraction(0)
        else:
            alpha = (t - U[j]) / (U[j + p] - U[j])
        # B_old_j = alpha_j B_new_j + (1 - alpha_{j+1}) B_new_{j+1}
        if j < m:
            trip.append((j, j, alpha))
        if j >= 1:
            trip.append((j - 1, j, 1 - alpha))
    newU = U[: k + 1] + [t] + U[k + 1 :]
    return newU, SignedSparseMatrix.from_triplets((m, m + 1), trip)


def _oslo(tau: Sequence[Fraction], t: Sequence[Fraction], p: int) -> SignedSparseMatrix:
    """Discrete B-splines: R[i, j] = alpha_{i,p}(j), so that B_tau_i = sum_j R[i, j] B_t_j."""
    m_tau = len(tau) - p - 1
    m_t = len(t) - p - 1
    rows: dict[int, dict[int, Fraction]] = {}
    for j in range(m_t):
        mu = max(i for i in range(len(tau) - 1) if tau[i] <= t[j] < tau[i + 1])
        # a[r] holds alpha_{mu-k+r, k}(j)
        a = [Fraction(1)]
        for k in range(1, p + 1):
            x = t[j + k]
            new = []
            for r in range(k + 1):
                i = mu - k + r
                v = Fraction(0)
                if r >= 1:  # term from alpha_{i, k-1}
                    den = tau[i + k] - tau[i]
                    if den:
                        v += (x - tau[i]) / den * a[r - 1]
                if r < k:  # term from alpha_{i+1, k-1}
                    den = tau[i + k + 1] - tau[i + 1]
                    if den:
                        v += (tau[i + k + 1] - x) / den * a[r]
                new.append(v)
            a = new
        for r, v in enumerate(a):
            i = mu - p + r
            if v != 0 and 0 <= i < m_tau:
                rows.setdefault(i, {})[j] = v
    return SignedSparseMatrix((m_tau, m_t), rows)


def two_scale_matrix(coarse: KnotVector, fine: KnotVector) -> SignedSparseMatrix:
    """Exact R with ``B_coarse = R @ B_fine`` (entries are non-negative rationals).

    Computed with the Oslo recursion, which inserts all new knots at once;
    :func:`insert_knot` gives the same matrix one knot at a time.
    """
    if coarse.degree != fine.degree:
        raise ValueError("knot vectors must share the degree")
    if not fine.contains(coarse):
        raise ValueError("fine knot vector does not contain the coarse one")
    return _two_scale_cached(coarse.degree, coarse.knots, fine.knots)


@lru_cache(maxsize=256)
def _two_scale_cached(p, tau, t):
    return _oslo(tau, t, p)


def curry_schoenberg_two_scale(coarse: KnotVector, fine: KnotVector) -> SignedSparseMatrix:
    """Exact R with ``D_coarse = R @ D_fine`` for the Curry-Schoenberg bases."""
    Rd = two_scale_matrix(coarse.derived(), fine.derived())
    sc = curry_schoenberg_scale_exact(coarse)
    sf = curry_schoenberg_scale_exact(fine)
    return Rd.scale_rows(sc).scale_cols([1 / s for s in sf])


def collocation(kv: KnotVector, xs: Sequence[float], n_deriv: int = 0, curry: bool = False) -> np.ndarray:
    """Dense array ``out[d, q, i]``: d-th derivative of function i at point q."""
    m = kv.m - 1 if curry else kv.m
    out = np.zeros((n_deriv + 1, len(xs), m))
    for q, x in enumerate(xs):
        ev = curry_schoenberg_eval(kv, x, n_deriv) if curry else eval_basis(kv, x, n_deriv)
        out[:, q, ev.indices] = ev.values
    return out
