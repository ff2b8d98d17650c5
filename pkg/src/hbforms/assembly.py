"""Galerkin assembly on the hierarchical Bezier mesh.

Bilinear forms are sums of separable terms: products of (scaled) partial
derivatives of single components of the test and trial functions. Under an
axis-aligned affine map every such term factorizes into univariate integrals,
so element matrices are Kronecker products of 1D tables.

Assembly is done level by level: the elements of level L are integrated in
the full tensor basis of level L, and the result is pulled back to the
hierarchical basis with the embedding ``T_L`` (``A = sum T_L^T A_L T_L``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .hierarchy import HierarchicalComplex
from .splines1d import KnotVector, curry_schoenberg_eval, eval_basis

# a linear expression in one vector field: list of (coef, component, dx, dy)
Expr = list


@dataclass(frozen=True)
class GeometryMap:
    """x = scale * xhat + offset, applied per axis."""
    scale: tuple[float, float] = (1.0, 1.0)
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if min(self.scale) <= 0:
            raise ValueError("scales must be positive")

    @property
    def jacobian(self) -> float:
        return self.scale[0] * self.scale[1]

    def to_reference(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (pts - np.asarray(self.offset)) / np.asarray(self.scale)


@dataclass(frozen=True)
class SpaceRef:
    """A hierarchical form space: complex plus form degree."""
    hc: HierarchicalComplex
    k: int

    @property
    def dim(self) -> int:
        return self.hc.dim(self.k)

    @property
    def kind(self) -> str:
        if self.k == 1:
            return "curl" if self.hc.orientation == "standard" else "div"
        return str(self.k)

    def n_components(self) -> int:
        return self.hc.space(self.k, 0).n_components


@dataclass
class AssembledOperator:
    matrix: sp.csr_matrix
    test: tuple
    trial: tuple
    kind: str = ""


def pullback_factor(space: SpaceRef, c: int, geom: GeometryMap) -> float:
    s1, s2 = geom.scale
    kind = space.kind
    if kind == "0":
        return 1.0
    if kind == "2":
        return 1.0 / (s1 * s2)
    if kind == "curl":
        return 1.0 / geom.scale[c]
    return geom.scale[c] / (s1 * s2)


# --- 1D tables -----------------------------------------------------------------

@dataclass(frozen=True)
class Table1D:
    """vals[e, d, q, a]: d-th reference derivative of the a-th function nonzero on element e."""
    vals: np.ndarray
    weights: np.ndarray       # (n_el, nq), reference measure
    left: np.ndarray          # (d, a) at xhat = 0 for element 0
    right: np.ndarray         # (d, a) at xhat = 1 for element n-1


@lru_cache(maxsize=128)
def element_table(kv: KnotVector, kind: str, nq: int) -> Table1D:
    bp = np.array([float(b) for b in kv.breakpoints])
    n = len(bp) - 1
    gx, gw = np.polynomial.legendre.leggauss(nq)
    ev = eval_basis if kind == "B" else curry_schoenberg_eval
    na = kv.degree + 1 if kind == "B" else kv.degree
    vals = np.zeros((n, 2, nq, na))
    weights = np.zeros((n, nq))
    for e in range(n):
        a, b = bp[e], bp[e + 1]
        xs = 0.5 * (a + b) + 0.5 * (b - a) * gx
        weights[e] = 0.5 * (b - a) * gw
        for q, x in enumerate(xs):
            r = ev(kv, float(x), 1)
            # on uniform maximally smooth knots the nonzero functions start at e
            vals[e, :, q, :] = r.values[:, r.indices - e]
    left = ev(kv, 0.0, 1).values
    right = ev(kv, 1.0, 1).values
    return Table1D(vals, weights, left, right)


# --- forms ---------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    coef: float
    test: tuple[int, int, int]    # (component, dx, dy)
    trial: tuple[int, int, int]
    face: tuple[int, int] | None = None   # (axis, side) with side 0 = low, 1 = high
    hpow: int = 0                         # factor h_F ** hpow on faces


def product(e_test: Expr, e_trial: Expr, coef=1.0, face=None, hpow=0) -> list[Term]:
    out = []
    for a, ct, dxt, dyt in e_test:
        for b, cu, dxu, dyu in e_trial:
            out.append(Term(coef * a * b, (ct, dxt, dyt), (cu, dxu, dyu), face, hpow))
    return out


def d(comp, axis, coef=1.0) -> Expr:
    return [(coef, comp, int(axis == 0), int(axis == 1))]


def val(comp, coef=1.0) -> Expr:
    return [(coef, comp, 0, 0)]


def eps(a, b) -> Expr:
    """Symmetric gradient entry e_ab = (d_b u_a + d_a u_b) / 2."""
    return d(a, b, 0.5) + d(b, a, 0.5)


FACES = [(0, 0), (0, 1), (1, 0), (1, 1)]


def normal_sign(face) -> float:
    return -1.0 if face[1] == 0 else 1.0


def eps_n(face, comp) -> Expr:
    """Component ``comp`` of (grad^s u) n on a face."""
    s = normal_sign(face)
    return [(s * c, *rest) for c, *rest in eps(comp, face[0])]


def bilinear_terms(kind: str, nu: float = 1.0, cpen: float = 1.0) -> list[Term]:
    t: list[Term] = []
    if kind.startswith("mass"):
        ncomp = 2 if kind == "mass_1" else 1
        for c in range(ncomp):
            t += product(val(c), val(c))
    elif kind == "curlcurl":
        curl = d(1, 0) + d(0, 1, -1.0)
        t += product(curl, curl)
    elif kind == "grad_coupling":          # (grad q, v): test v (1-form), trial q (0-form)
        t += product(val(0), d(0, 0)) + product(val(1), d(0, 1))
    elif kind == "curl_coupling":          # (curl u, psi)
        t += product(val(0), d(1, 0) + d(0, 1, -1.0))
    elif kind == "div_coupling":           # (q, div u)
        t += product(val(0), d(0, 0) + d(1, 1))
    elif kind == "vnorm_gram":
        # |v|^2 = |grad v|^2 + cpen/h |v|^2 on the boundary
        for a in range(2):
            for b in range(2):
                t += product(d(a, b), d(a, b))
        for f in FACES:
            for a in range(2):
                t += product(val(a), val(a), cpen, f, -1)
    elif kind in ("sym_grad_stiffness", "vnorm_gram_sym", "nitsche_c", "stokes_velocity"):
        scale = 2 * nu if kind != "vnorm_gram_sym" else 1.0
        if kind != "nitsche_c":
            for a in range(2):
                for b in range(2):
                    t += product(eps(a, b), eps(a, b), scale)
        if kind in ("nitsche_c", "stokes_velocity"):
            # c(u, v) = int 2 nu ((e(u) n).v + (e(v) n).u - cpen/h u.v); stokes_velocity uses -c
            sgn = 1.0 if kind == "nitsche_c" else -1.0
            for f in FACES:
                for a in range(2):
                    t += product(val(a), eps_n(f, a), sgn * 2 * nu, f)
                    t += product(eps_n(f, a), val(a), sgn * 2 * nu, f)
                    t += product(val(a), val(a), -sgn * 2 * nu * cpen, f, -1)
        if kind == "vnorm_gram_sym":
            # symmetric gradient, h-weighted normal flux and penalty
            for f in FACES:
                for a in range(2):
                    t += product(eps_n(f, a), eps_n(f, a), 1.0, f, 1)
                    t += product(val(a), val(a), cpen, f, -1)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    return t


# --- assembly --------------------------------------------------------------------

def _axis_factor(tab_t: Table1D, tab_u: Table1D, dt: int, du: int, elems: np.ndarray, point: int | None):
    """(len(elems), na_t, na_u) univariate integrals or point products."""
    if point is None:
        Vt = tab_t.vals[elems, dt]     # (E, q, a)
        Vu = tab_u.vals[elems, du]
        W = tab_t.weights[elems]
        return np.einsum("eq,eqa,eqb->eab", W, Vt, Vu)
    pt = tab_t.left if point == 0 else tab_t.right
    pu = tab_u.left if point == 0 else tab_u.right
    return np.broadcast_to(np.outer(pt[dt], pu[du]), (len(elems),) + (pt.shape[1], pu.shape[1]))


def assemble_level(test: SpaceRef, trial: SpaceRef, terms: list[Term], level: int, geom: GeometryMap,
                   nq: int | None = None) -> sp.csr_matrix:
    """Matrix over the full level-``level`` tensor spaces, integrated on that level's elements."""
    ladder = test.hc.ladder
    ft, fu = test.hc.space(test.k, level), trial.hc.space(trial.k, level)
    kv = ladder.knots(level)
    nq = nq or max(ladder.degree) + 1
    elem_mask = ladder.elements(level)
    n1, n2 = elem_mask.shape
    rows, cols, data = [], [], []
    s = geom.scale
    for term in terms:
        ct, dxt, dyt = term.test
        cu, dxu, dyu = term.trial
        tt, tu = ft.types[ct], fu.types[cu]
        factor = term.coef * pullback_factor(test, ct, geom) * pullback_factor(trial, cu, geom)
        factor *= s[0] ** -(dxt + dxu) * s[1] ** -(dyt + dyu)
        if term.face is None:
            ex, ey = np.nonzero(elem_mask)
            factor *= geom.jacobian
            px = py = None
        else:
            axis, side = term.face
            sel = elem_mask.copy()
            edge = 0 if side == 0 else (n1 - 1 if axis == 0 else n2 - 1)
            if axis == 0:
                sel[np.arange(n1) != edge, :] = False
            else:
                sel[:, np.arange(n2) != edge] = False
            ex, ey = np.nonzero(sel)
            h = s[axis] / (n1 if axis == 0 else n2)
            factor *= s[1 - axis] * h ** term.hpow
            px, py = (side, None) if axis == 0 else (None, side)
        if len(ex) == 0 or factor == 0:
            continue
        Tx_t, Tx_u = element_table(kv[0], tt[0], nq), element_table(kv[0], tu[0], nq)
        Ty_t, Ty_u = element_table(kv[1], tt[1], nq), element_table(kv[1], tu[1], nq)
        Kx = _axis_factor(Tx_t, Tx_u, dxt, dxu, ex, px)
        Ky = _axis_factor(Ty_t, Ty_u, dyt, dyu, ey, py)
        loc = factor * np.einsum("eac,ebd->eabcd", Kx, Ky)
        nat, nbt = Kx.shape[1], Ky.shape[1]
        nau, nbu = Kx.shape[2], Ky.shape[2]
        myt, myu = ft.comp_shapes[ct][1], fu.comp_shapes[cu][1]
        a_t, b_t = np.arange(nat), np.arange(nbt)
        a_u, b_u = np.arange(nau), np.arange(nbu)
        r = ft.offsets[ct] + (ex[:, None, None] + a_t[None, :, None]) * myt + (ey[:, None, None] + b_t[None, None, :])
        c = fu.offsets[cu] + (ex[:, None, None] + a_u[None, :, None]) * myu + (ey[:, None, None] + b_u[None, None, :])
        E = len(ex)
        R = np.broadcast_to(r.reshape(E, -1, 1), (E, nat * nbt, nau * nbu))
        C = np.broadcast_to(c.reshape(E, 1, -1), (E, nat * nbt, nau * nbu))
        rows.append(R.ravel())
        cols.append(C.ravel())
        data.append(loc.reshape(E, nat * nbt, nau * nbu).ravel())
    if not data:
        return sp.csr_matrix((ft.full_dim, fu.full_dim))
    return sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(ft.full_dim, fu.full_dim))


def assemble_terms(test: SpaceRef, trial: SpaceRef, terms: list[Term], geom: GeometryMap, nq=None) -> sp.csr_matrix:
    if test.hc.ladder is not trial.hc.ladder:
        raise ValueError("test and trial spaces come from different ladders")
    A = sp.csr_matrix((test.dim, trial.dim))
    for L in range(test.hc.ladder.n_levels):
        if not test.hc.ladder.elements(L).any():
            continue
        AL = assemble_level(test, trial, terms, L, geom, nq)
        Tt = test.hc.level_embedding(test.k, L)
        Tu = trial.hc.level_embedding(trial.k, L)
        A = A + (Tt.T @ AL @ Tu)
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.sort_indices()
    return A


_SPACES = {
    "mass_0": (0, 0), "mass_1": (1, 1), "mass_2": (2, 2), "curlcurl": (1, 1),
    "grad_coupling": (1, 0), "curl_coupling": (2, 1), "div_coupling": (2, 1),
    "sym_grad_stiffness": (1, 1), "nitsche_c": (1, 1), "vnorm_gram": (1, 1), "vnorm_gram_sym": (1, 1),
    "stokes_velocity": (1, 1),
}


def assemble(kind: str, hc: HierarchicalComplex, geom: GeometryMap | None = None, nu: float = 1.0,
             cpen: float | None = None, nq: int | None = None) -> AssembledOperator:
    """Assemble a named operator on one hierarchical complex.

    Maxwell kinds expect the standard orientation and Stokes kinds
    (``div_coupling``, ``sym_grad_stiffness``, ``nitsche_c``, ``vnorm_gram``)
    the rotated one.
    """
    if kind not in _SPACES:
        raise ValueError(f"unknown operator kind {kind!r}")
    geom = geom or GeometryMap()
    if cpen is None:
        cpen = 5.0 * max(hc.ladder.degree)
    stokes = kind in ("div_coupling", "sym_grad_stiffness", "nitsche_c", "vnorm_gram", "vnorm_gram_sym",
                      "stokes_velocity")
    if kind in ("curlcurl", "grad_coupling", "curl_coupling") and hc.orientation != "standard":
        raise ValueError(f"{kind} needs the standard (curl-conforming) complex")
    if stokes and hc.orientation != "rotated":
        raise ValueError(f"{kind} needs the rotated (div-conforming) complex")
    kt, ku = _SPACES[kind]
    terms = bilinear_terms(kind, nu, cpen)
    A = assemble_terms(SpaceRef(hc, kt), SpaceRef(hc, ku), terms, geom, nq)
    return AssembledOperator(A, (kt, hc.orientation), (ku, hc.orientation), kind)


def nitsche_load(hc: HierarchicalComplex, u_boundary: dict, geom: GeometryMap | None = None, nu: float = 1.0,
                 cpen: float | None = None, nq: int | None = None) -> np.ndarray:
    """L(v) = int_G 2 nu ((grad^s v) n . u_B - cpen/h v . u_B), u_B constant per face.

    ``u_boundary`` maps faces ``(axis, side)`` to constant vectors.
    """
    geom = geom or GeometryMap()
    if cpen is None:
        cpen = 5.0 * max(hc.ladder.degree)
    space = SpaceRef(hc, 1)
    out = np.zeros(space.dim)
    for face, uB in u_boundary.items():
        if face not in FACES:
            raise ValueError(f"{face} is not a boundary face")
        terms = []
        for a in range(2):
            if uB[a] == 0:
                continue
            # the "trial" is a constant unit vector field; encode as component-free weight
            terms += [(2 * nu * uB[a] * c, ct, dx, dy, 0) for c, ct, dx, dy in eps_n(face, a)]
            terms += [(-2 * nu * cpen * uB[a], a, 0, 0, -1)]
        out += _assemble_face_load(space, terms, face, geom, nq)
    return out


def _assemble_face_load(space: SpaceRef, terms, face, geom: GeometryMap, nq=None) -> np.ndarray:
    hc = space.hc
    ladder = hc.ladder
    nq = nq or max(ladder.degree) + 1
    out = np.zeros(space.dim)
    s = geom.scale
    axis, side = face
    for L in range(ladder.n_levels):
        mask = ladder.elements(L)
        if not mask.any():
            continue
        fs = hc.space(space.k, L)
        kv = ladder.knots(L)
        n1, n2 = mask.shape
        edge = 0 if side == 0 else (n1 - 1 if axis == 0 else n2 - 1)
        sel = np.zeros_like(mask)
        if axis == 0:
            sel[edge, :] = mask[edge, :]
        else:
            sel[:, edge] = mask[:, edge]
        ex, ey = np.nonzero(sel)
        if len(ex) == 0:
            continue
        vec = np.zeros(fs.full_dim)
        h = s[axis] / (n1 if axis == 0 else n2)
        for coef, c, dx, dy, hpow in terms:
            t = fs.types[c]
            factor = coef * pullback_factor(space, c, geom) * s[0] ** -dx * s[1] ** -dy * s[1 - axis] * h ** hpow
            Tx, Ty = element_table(kv[0], t[0], nq), element_table(kv[1], t[1], nq)
            if axis == 0:
                fx = np.broadcast_to((Tx.left if side == 0 else Tx.right)[dx], (len(ex), Tx.vals.shape[3]))
                fy = np.einsum("eq,eqa->ea", Ty.weights[ey], Ty.vals[ey, dy])
            else:
                fx = np.einsum("eq,eqa->ea", Tx.weights[ex], Tx.vals[ex, dx])
                fy = np.broadcast_to((Ty.left if side == 0 else Ty.right)[dy], (len(ey), Ty.vals.shape[3]))
            loc = factor * np.einsum("ea,eb->eab", fx, fy)
            my = fs.comp_shapes[c][1]
            a = np.arange(fx.shape[1])
            b = np.arange(fy.shape[1])
            idx = fs.offsets[c] + (ex[:, None, None] + a[None, :, None]) * my + (ey[:, None, None] + b[None, None, :])
            np.add.at(vec, idx.ravel(), loc.ravel())
        out += hc.level_embedding(space.k, L).T @ vec
    return out


def integrate_basis(hc: HierarchicalComplex, k: int = 2, geom: GeometryMap | None = None, nq: int | None = None) -> np.ndarray:
    """Physical integrals of the scalar hierarchical basis functions (k = 0 or 2)."""
    if k not in (0, 2):
        raise ValueError("only scalar forms can be integrated")
    geom = geom or GeometryMap()
    ladder = hc.ladder
    nq = nq or max(ladder.degree) + 1
    space = SpaceRef(hc, k)
    out = np.zeros(space.dim)
    for L in range(ladder.n_levels):
        mask = ladder.elements(L)
        if not mask.any():
            continue
        fs = hc.space(k, L)
        kv = ladder.knots(L)
        t = fs.types[0]
        ex, ey = np.nonzero(mask)
        Tx, Ty = element_table(kv[0], t[0], nq), element_table(kv[1], t[1], nq)
        fx = np.einsum("eq,eqa->ea", Tx.weights[ex], Tx.vals[ex, 0])
        fy = np.einsum("eq,eqa->ea", Ty.weights[ey], Ty.vals[ey, 0])
        loc = pullback_factor(space, 0, geom) * geom.jacobian * np.einsum("ea,eb->eab", fx, fy)
        my = fs.comp_shapes[0][1]
        a = np.arange(fx.shape[1])
        b = np.arange(fy.shape[1])
        idx = (ex[:, None, None] + a[None, :, None]) * my + (ey[:, None, None] + b[None, None, :])
        vec = np.zeros(fs.full_dim)
        np.add.at(vec, idx.ravel(), loc.ravel())
        out += hc.level_embedding(k, L).T @ vec
    return out


# --- evaluation ------------------------------------------------------------------

def _collocate(kv: KnotVector, kind: str, xs: np.ndarray, nder: int) -> np.ndarray:
    m = kv.m if kind == "B" else kv.m - 1
    out = np.zeros((nder + 1, len(xs), m))
    ev = eval_basis if kind == "B" else curry_schoenberg_eval
    for q, x in enumerate(xs):
        r = ev(kv, float(x), nder)
        out[:, q, r.indices] = r.values
    return out


def evaluate_field(hc: HierarchicalComplex, k: int, coeffs, points, geom: GeometryMap | None = None,
                   derivatives: bool = False):
    """Physical values of a hierarchical k-form at physical points.

    Returns an array (npts, ncomp); with ``derivatives`` also an array
    (npts, ncomp, 2) of physical partial derivatives.
    """
    geom = geom or GeometryMap()
    ref = geom.to_reference(points)
    if np.any(ref < -1e-12) or np.any(ref > 1 + 1e-12):
        raise ValueError("point outside the domain")
    ref = np.clip(ref, 0.0, 1.0)
    L = hc.ladder.N
    full = hc.level_embedding(k, L) @ np.asarray(coeffs, dtype=float)
    fs = hc.space(k, L)
    kv = hc.ladder.knots(L)
    space = SpaceRef(hc, k)
    npts = len(ref)
    vals = np.zeros((npts, fs.n_components))
    ders = np.zeros((npts, fs.n_components, 2))
    for c, t in enumerate(fs.types):
        C = full[fs.offsets[c] : fs.offsets[c + 1]].reshape(fs.comp_shapes[c])
        Bx = _collocate(kv[0], t[0], ref[:, 0], 1)
        By = _collocate(kv[1], t[1], ref[:, 1], 1)
        pf = pullback_factor(space, c, geom)
        vals[:, c] = pf * np.einsum("qi,ij,qj->q", Bx[0], C, By[0])
        ders[:, c, 0] = pf / geom.scale[0] * np.einsum("qi,ij,qj->q", Bx[1], C, By[0])
        ders[:, c, 1] = pf / geom.scale[1] * np.einsum("qi,ij,qj->q", Bx[0], C, By[1])
    return (vals, ders) if derivatives else vals


def vorticity(hc: HierarchicalComplex, coeffs, points, geom: GeometryMap | None = None) -> np.ndarray:
    """curl u = d u_y / dx - d u_x / dy of a 1-form field."""
    _, D = evaluate_field(hc, 1, coeffs, points, geom, derivatives=True)
    return D[:, 1, 0] - D[:, 0, 1]


def divergence(hc: HierarchicalComplex, coeffs, points, geom: GeometryMap | None = None) -> np.ndarray:
    _, D = evaluate_field(hc, 1, coeffs, points, geom, derivatives=True)
    return D[:, 0, 0] + D[:, 1, 1]
