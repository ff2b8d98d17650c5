"""Tensor-product spline form spaces in 2D and their incidence matrices.

Each form space is a list of components. A component is a tensor product of
two univariate bases, each either the B-spline basis ``B`` of the 0-form
knot vector or its Curry-Schoenberg basis ``D`` (degree one lower, derived
knots). Functions of a component are indexed lexicographically, with flat
index ``i * my + j`` where ``i`` runs in x and ``j`` in y.

Standard complex:  grad, curl = dx u_y - dy u_x
Rotated complex:   rot = (dy, -dx), div
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .sparse import SignedSparseMatrix
from .splines1d import KnotVector, greville_sites

ORIENTATIONS = ("standard", "rotated")

# component types per (k, orientation)
_COMPONENTS = {
    (0, "standard"): (("B", "B"),),
    (1, "standard"): (("D", "B"), ("B", "D")),
    (2, "standard"): (("D", "D"),),
    (0, "rotated"): (("B", "B"),),
    (1, "rotated"): (("B", "D"), ("D", "B")),
    (2, "rotated"): (("D", "D"),),
}

# exterior derivative as (out component, in component, axis, sign)
DIFF_TERMS = {
    (0, "standard"): ((0, 0, 0, 1), (1, 0, 1, 1)),
    (1, "standard"): ((0, 0, 1, -1), (0, 1, 0, 1)),
    (0, "rotated"): ((0, 0, 1, 1), (1, 0, 0, -1)),
    (1, "rotated"): ((0, 0, 0, 1), (0, 1, 1, 1)),
}


def component_types(k: int, orientation: str = "standard"):
    if orientation not in ORIENTATIONS:
        raise ValueError(f"unknown orientation {orientation!r}")
    return _COMPONENTS[(k, orientation)]


def support_ranges_1d(kv: KnotVector, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive element ranges ``[lo, hi]`` of the open supports of B or D functions."""
    bp = {b: e for e, b in enumerate(kv.breakpoints)}
    U, p = kv.knots, kv.degree
    if kind == "B":
        lo = [bp[U[i]] for i in range(kv.m)]
        hi = [bp[U[i + p + 1]] - 1 for i in range(kv.m)]
    else:
        lo = [bp[U[j + 1]] for j in range(kv.m - 1)]
        hi = [bp[U[j + p + 1]] - 1 for j in range(kv.m - 1)]
    return np.array(lo), np.array(hi)


def incidence_1d(m: int) -> sp.csr_matrix:
    """(m-1) x m difference matrix, ``(G c)_j = c_{j+1} - c_j``."""
    return sp.diags([-np.ones(m - 1), np.ones(m - 1)], [0, 1], shape=(m - 1, m), format="csr", dtype=np.int64)


@dataclass(frozen=True)
class FormSpace:
    """Tensor-product space of k-forms on the unit square.

    ``kx``, ``ky`` are the 0-form knot vectors; the component spaces derive
    from them. With ``bc`` the functions with a nonzero trace (tangential for
    curl-conforming, normal for div-conforming) are dropped.
    """
    k: int
    kx: KnotVector
    ky: KnotVector
    orientation: str = "standard"
    bc: bool = False
    level: int = 0

    def __post_init__(self):
        if self.k not in (0, 1, 2):
            raise ValueError("form degree must be 0, 1 or 2")
        if self.kx.degree < 1 or self.ky.degree < 1:
            raise ValueError("0-form degree must be >= 1 in both directions")
        component_types(self.k, self.orientation)

    @property
    def types(self):
        return component_types(self.k, self.orientation)

    @property
    def n_components(self) -> int:
        return len(self.types)

    def kv(self, axis: int) -> KnotVector:
        return self.kx if axis == 0 else self.ky

    def comp_kv(self, c: int, axis: int) -> KnotVector:
        """Knot vector and degree of component c along an axis."""
        kv = self.kv(axis)
        return kv if self.types[c][axis] == "B" else kv.derived()

    def comp_degrees(self, c: int) -> tuple[int, int]:
        return tuple(self.comp_kv(c, a).degree for a in (0, 1))

    @cached_property
    def comp_shapes(self) -> tuple[tuple[int, int], ...]:
        out = []
        for t in self.types:
            out.append(tuple(self.kv(a).m - (t[a] == "D") for a in (0, 1)))
        return tuple(out)

    @cached_property
    def offsets(self) -> np.ndarray:
        sizes = [a * b for a, b in self.comp_shapes]
        return np.concatenate([[0], np.cumsum(sizes)])

    @property
    def full_dim(self) -> int:
        return int(self.offsets[-1])

    def comp_mask(self, c: int) -> np.ndarray:
        """Boolean (mx, my) array of retained functions of component c."""
        mx, my = self.comp_shapes[c]
        mask = np.ones((mx, my), dtype=bool)
        if self.bc:
            t = self.types[c]
            if t[0] == "B":
                mask[[0, -1], :] = False
            if t[1] == "B":
                mask[:, [0, -1]] = False
        return mask

    @cached_property
    def mask(self) -> np.ndarray:
        return np.concatenate([self.comp_mask(c).ravel() for c in range(self.n_components)])

    @cached_property
    def dofs(self) -> np.ndarray:
        """Indices (into the full space) of retained functions."""
        return np.flatnonzero(self.mask)

    @property
    def dim(self) -> int:
        return int(self.mask.sum())

    def supports(self, c: int):
        """Per-function inclusive element ranges (xlo, xhi, ylo, yhi) as (mx, my) arrays."""
        t = self.types[c]
        xlo, xhi = support_ranges_1d(self.kx, t[0])
        ylo, yhi = support_ranges_1d(self.ky, t[1])
        mx, my = len(xlo), len(ylo)
        X = lambda v: np.broadcast_to(v[:, None], (mx, my))
        Y = lambda v: np.broadcast_to(v[None, :], (mx, my))
        return X(xlo), X(xhi), Y(ylo), Y(yhi)


def build_form_space(k, p1, p2, kx: KnotVector, ky: KnotVector, orientation="standard", bc=False, level=0) -> FormSpace:
    if kx.degree != p1 or ky.degree != p2:
        raise ValueError("degrees do not match knot vectors")
    return FormSpace(k, kx, ky, orientation, bc, level)


def _diff_full_scipy(space: FormSpace) -> sp.csr_matrix:
    """Matrix of d^k between the unmasked spaces (integer entries)."""
    k, orient = space.k, space.orientation
    if k == 2:
        raise ValueError("no derivative of 2-forms")
    target = FormSpace(k + 1, space.kx, space.ky, orient, False, space.level)
    blocks = [[None] * space.n_components for _ in range(target.n_components)]
    for oc, ic, axis, sign in DIFF_TERMS[(k, orient)]:
        tin = space.types[ic]
        mx, my = space.comp_shapes[ic]
        if axis == 0:
            assert tin[0] == "B"
            op = sp.kron(incidence_1d(mx), sp.identity(my, dtype=np.int64))
        else:
            assert tin[1] == "B"
            op = sp.kron(sp.identity(mx, dtype=np.int64), incidence_1d(my))
        blocks[oc][ic] = sign * op
    for oc in range(target.n_components):
        for ic in range(space.n_components):
            if blocks[oc][ic] is None:
                blocks[oc][ic] = sp.csr_matrix(
                    (int(np.prod(target.comp_shapes[oc])), int(np.prod(space.comp_shapes[ic]))), dtype=np.int64)
    return sp.bmat(blocks, format="csr")


def diff_matrix(space: FormSpace, exact: bool = True):
    """Matrix of d^k restricted to the BC masks of ``space`` and its target.

    Returns a :class:`SignedSparseMatrix` if ``exact`` else a scipy CSR matrix.
    """
    full = _diff_full_scipy(space)
    target = FormSpace(space.k + 1, space.kx, space.ky, space.orientation, space.bc, space.level)
    A = full[target.dofs][:, space.dofs]
    if not exact:
        return A.astype(float)
    return SignedSparseMatrix.from_scipy(A)


def apply_derivative(space: FormSpace, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != space.dim:
        raise ValueError(f"expected {space.dim} coefficients, got {coeffs.shape[0]}")
    return diff_matrix(space, exact=False) @ coeffs


@dataclass(frozen=True)
class GrevilleGrid:
    """Cartesian grid whose vertices are the Greville points of the 0-form space.

    Vertices (i, j) <-> 0-forms, x-edges (i, j)-(i+1, j) <-> the (D, B)
    component, y-edges (i, j)-(i, j+1) <-> the (B, D) component, cells <-> 2-forms.
    """
    x: np.ndarray
    y: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.x), len(self.y)

    @property
    def n_vertices(self) -> int:
        return len(self.x) * len(self.y)

    @property
    def n_edges(self) -> int:
        m1, m2 = self.shape
        return (m1 - 1) * m2 + m1 * (m2 - 1)

    @property
    def n_cells(self) -> int:
        m1, m2 = self.shape
        return (m1 - 1) * (m2 - 1)

    def vertex_coords(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)


def build_greville_grid(space0: FormSpace) -> GrevilleGrid:
    if space0.k != 0:
        raise ValueError("Greville grid is built from the 0-form space")
    return GrevilleGrid(greville_sites(space0.kx), greville_sites(space0.ky))


def incidence_matrix(grid_or_space, k: int, orientation: str = "standard", bc: bool = False):
    """Incidence matrix of the Greville grid, i.e. d^k in the spline bases."""
    space0 = grid_or_space
    space = FormSpace(k, space0.kx, space0.ky, orientation, bc, space0.level)
    return diff_matrix(space, exact=True)


@dataclass(frozen=True)
class TensorComplex:
    """The three form spaces of one level plus their differentials."""
    kx: KnotVector
    ky: KnotVector
    orientation: str = "standard"
    bc: bool = False
    level: int = 0

    @cached_property
    def spaces(self) -> tuple[FormSpace, FormSpace, FormSpace]:
        return tuple(FormSpace(k, self.kx, self.ky, self.orientation, self.bc, self.level) for k in range(3))

    def d(self, k: int, exact: bool = True):
        return diff_matrix(self.spaces[k], exact)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(s.dim for s in self.spaces)
