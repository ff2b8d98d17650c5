"""Hierarchical spline complexes on dyadically refined subdomains.

A :class:`LevelLadder` holds the level-0 mesh, the degree and the nested
subdomains ``Omega_1 ⊃ Omega_2 ⊃ ...``. Each ``Omega_l`` is a boolean mask
over the elements of level ``l - 1``, so the closure of ``Omega_l`` is a union
of level ``l - 1`` elements by construction.

:class:`HierarchicalComplex` selects the active functions per level and
form degree (a level-l function is active iff its support lies in
``Omega_l`` but not in ``Omega_{l+1}``) and builds the hierarchical
differential matrices. Dofs are ordered level-major, then by component, then
lexicographically (x index major).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .sparse import SignedSparseMatrix
from .splines1d import KnotVector, curry_schoenberg_two_scale, make_uniform_open_knots, two_scale_matrix
from .tpcomplex import DIFF_TERMS, FormSpace, TensorComplex


def upsample(mask: np.ndarray, times: int = 1) -> np.ndarray:
    """Dyadic refinement of an element mask."""
    f = 2 ** times
    return np.repeat(np.repeat(mask, f, axis=0), f, axis=1)


def summed_area(mask: np.ndarray) -> np.ndarray:
    S = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    S[1:, 1:] = np.cumsum(np.cumsum(mask, axis=0), axis=1)
    return S


def box_count(S: np.ndarray, xlo, xhi, ylo, yhi) -> np.ndarray:
    """Number of True cells of the mask in the inclusive boxes."""
    return S[xhi + 1, yhi + 1] - S[xlo, yhi + 1] - S[xhi + 1, ylo] + S[xlo, ylo]


def boxes_inside(mask: np.ndarray, xlo, xhi, ylo, yhi) -> np.ndarray:
    S = summed_area(mask)
    area = (xhi - xlo + 1) * (yhi - ylo + 1)
    return box_count(S, xlo, xhi, ylo, yhi) == area


@dataclass
class LevelLadder:
    """Degrees, level-0 mesh size and nested subdomains.

    ``domains[l - 1]`` is ``Omega_l`` as a boolean array over level ``l - 1``
    elements, shape ``(n1 * 2**(l-1), n2 * 2**(l-1))``.
    """
    degree: tuple[int, int]
    n0: tuple[int, int]
    domains: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.degree = tuple(int(p) for p in self.degree)
        self.n0 = tuple(int(n) for n in self.n0)
        if min(self.degree) < 1:
            raise ValueError("0-form degree must be >= 1")
        if min(self.n0) < 1:
            raise ValueError("need at least one element per direction")
        self.domains = [np.asarray(d, dtype=bool) for d in self.domains]
        # trailing empty subdomains carry no information
        while self.domains and not self.domains[-1].any():
            self.domains.pop()
        self.validate()

    def validate(self):
        for l, dom in enumerate(self.domains, start=1):
            expected = self.shape(l - 1)
            if dom.shape != expected:
                raise ValueError(f"Omega_{l} has shape {dom.shape}, expected {expected}")
            if l >= 2 and not np.all(self.domains[l - 2][tuple(np.indices(expected) // 2)] | ~dom):
                bad = np.argwhere(dom & ~upsample(self.domains[l - 2]))[0]
                raise ValueError(f"Omega_{l} not nested in Omega_{l - 1} at element {tuple(bad)}")

    @property
    def n_levels(self) -> int:
        return len(self.domains) + 1

    @property
    def N(self) -> int:
        return self.n_levels - 1

    def shape(self, level: int) -> tuple[int, int]:
        return self.n0[0] * 2 ** level, self.n0[1] * 2 ** level

    def knots(self, level: int) -> tuple[KnotVector, KnotVector]:
        return _uniform_pair(self.degree, self.shape(level))

    def omega(self, l: int, at: int) -> np.ndarray:
        """Mask of Omega_l over elements of level ``at`` (``at >= l - 1``)."""
        if l == 0:
            return np.ones(self.shape(at), dtype=bool)
        if l > self.N:
            return np.zeros(self.shape(at), dtype=bool)
        if at < l - 1:
            raise ValueError("cannot represent Omega_l below level l - 1")
        return upsample(self.domains[l - 1], at - l + 1)

    def complex(self, level: int, orientation="standard", bc=True) -> TensorComplex:
        kx, ky = self.knots(level)
        return TensorComplex(kx, ky, orientation, bc, level)

    def elements(self, level: int) -> np.ndarray:
        """Boolean mask of hierarchical mesh elements of a level."""
        return self.omega(level, level) & ~self.omega(level + 1, level)

    def level_map(self) -> np.ndarray:
        """Level of the hierarchical element covering each finest-level element."""
        N = self.N
        out = np.zeros(self.shape(N), dtype=int)
        for l in range(1, N + 1):
            out[self.omega(l, N)] = l
        return out

    def grading(self) -> int:
        """Largest level jump between elements sharing an edge or a vertex."""
        lm = self.level_map()
        P = np.pad(lm, 1, mode="edge")
        jump = 0
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                nb = P[1 + dx : 1 + dx + lm.shape[0], 1 + dy : 1 + dy + lm.shape[1]]
                jump = max(jump, int(np.abs(nb - lm).max()))
        return jump


_pair_cache: dict = {}


def _uniform_pair(degree, shape):
    key = (degree, shape)
    if key not in _pair_cache:
        _pair_cache[key] = (make_uniform_open_knots(degree[0], shape[0]), make_uniform_open_knots(degree[1], shape[1]))
    return _pair_cache[key]


@dataclass(frozen=True)
class HierElement:
    level: int
    i: int
    j: int

    def bounds(self, n0) -> tuple[float, float, float, float]:
        hx, hy = 1.0 / (n0[0] * 2 ** self.level), 1.0 / (n0[1] * 2 ** self.level)
        return self.i * hx, (self.i + 1) * hx, self.j * hy, (self.j + 1) * hy


def build_hier_mesh(ladder: LevelLadder) -> list[HierElement]:
    out = []
    for l in range(ladder.n_levels):
        for i, j in np.argwhere(ladder.elements(l)):
            out.append(HierElement(l, int(i), int(j)))
    return out


class HierarchicalComplex:
    """Active sets and hierarchical differential matrices of a ladder."""

    def __init__(self, ladder: LevelLadder, orientation: str = "standard", bc: bool = True):
        self.ladder = ladder
        self.orientation = orientation
        self.bc = bc
        self.levels = [ladder.complex(l, orientation, bc) for l in range(ladder.n_levels)]
        # active[k][l]: sorted indices into the full (unmasked) level-l k-form space
        self.active = [[self._active(k, l) for l in range(ladder.n_levels)] for k in range(3)]
        self.level_offsets = [np.concatenate([[0], np.cumsum([len(a) for a in self.active[k]])]) for k in range(3)]
        self._lookup = [[self._make_lookup(k, l) for l in range(ladder.n_levels)] for k in range(3)]
        self._dmat: dict = {}

    # active sets ------------------------------------------------------

    def space(self, k: int, level: int) -> FormSpace:
        return self.levels[level].spaces[k]

    def inside(self, k: int, level: int, l_dom: int) -> np.ndarray:
        """Flat mask over the full level space: support contained in Omega_{l_dom}."""
        sp_ = self.space(k, level)
        dom = self.ladder.omega(l_dom, level)
        out = []
        for c in range(sp_.n_components):
            out.append(boxes_inside(dom, *sp_.supports(c)).ravel())
        return np.concatenate(out)

    def _active(self, k, l):
        sp_ = self.space(k, l)
        act = sp_.mask & self.inside(k, l, l) & ~self.inside(k, l, l + 1)
        return np.flatnonzero(act)

    def _make_lookup(self, k, l):
        lk = np.full(self.space(k, l).full_dim, -1, dtype=np.int64)
        lk[self.active[k][l]] = self.level_offsets[k][l] + np.arange(len(self.active[k][l]))
        return lk

    def dim(self, k: int) -> int:
        return int(self.level_offsets[k][-1])

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.dim(k) for k in range(3))

    def dof_table(self, k: int) -> np.ndarray:
        """Rows (level, component, i, j) for each hierarchical dof, in order."""
        rows = []
        for l in range(self.ladder.n_levels):
            sp_ = self.space(k, l)
            for f in self.active[k][l]:
                c = int(np.searchsorted(sp_.offsets, f, side="right") - 1)
                my = sp_.comp_shapes[c][1]
                loc = f - sp_.offsets[c]
                rows.append((l, c, loc // my, loc % my))
        return np.array(rows, dtype=np.int64).reshape(-1, 4)

    # two-scale relations ----------------------------------------------

    @cached_property
    def _two_scale_1d(self):
        """Exact per-level, per-axis, per-kind univariate two-scale matrices."""
        out = []
        for l in range(self.ladder.N):
            kc = self.ladder.knots(l)
            kf = self.ladder.knots(l + 1)
            axes = []
            for a in (0, 1):
                axes.append({"B": two_scale_matrix(kc[a], kf[a]), "D": curry_schoenberg_two_scale(kc[a], kf[a])})
            out.append(axes)
        return out

    def prolongation(self, k: int, level: int) -> sp.csr_matrix:
        """Float matrix mapping level coefficients to level+1 coefficients (full spaces)."""
        ts = self._two_scale_1d[level]
        coarse = self.space(k, level)
        blocks = []
        for t in coarse.types:
            Rx = ts[0][t[0]].to_scipy()
            Ry = ts[1][t[1]].to_scipy()
            blocks.append(sp.kron(Rx.T, Ry.T, format="csr"))
        return sp.block_diag(blocks, format="csr")

    def level_embedding(self, k: int, level: int) -> sp.csr_matrix:
        """T_L: all hierarchical dofs expressed in the full level-L space.

        Columns of finer levels are zero: their supports lie in Omega_{L+1}, which
        does not meet the level-L elements of the hierarchical mesh.
        """
        T = self._embedding(k, level)
        pad = self.dim(k) - T.shape[1]
        if pad:
            T = sp.hstack([T, sp.csr_matrix((T.shape[0], pad))], format="csr")
        return T

    def _embedding(self, k: int, level: int) -> sp.csr_matrix:
        if not hasattr(self, "_emb"):
            self._emb = {}
        key = (k, level)
        if key not in self._emb:
            n_full = self.space(k, level).full_dim
            act = self.active[k][level]
            S = sp.csr_matrix((np.ones(len(act)), (act, np.arange(len(act)))), shape=(n_full, len(act)))
            if level == 0:
                T = S
            else:
                T = sp.hstack([self.prolongation(k, level - 1) @ self._embedding(k, level - 1), S], format="csr")
            self._emb[key] = T
        return self._emb[key]

    # hierarchical differential ------------------------------------------

    def _expand(self, k: int, level: int, f: int, memo: dict) -> dict[int, Fraction]:
        """Coefficients of level-``level`` k-form function ``f`` (full index) over active dofs."""
        key = (level, f)
        if key in memo:
            return memo[key]
        h = self._lookup[k][level][f]
        if h >= 0:
            res = {int(h): Fraction(1)}
        else:
            if level >= self.ladder.N:
                raise AssertionError(f"inactive {k}-form {f} on the finest level {level}")
            sp_ = self.space(k, level)
            c = int(np.searchsorted(sp_.offsets, f, side="right") - 1)
            my = sp_.comp_shapes[c][1]
            i, j = divmod(int(f - sp_.offsets[c]), my)
            t = sp_.types[c]
            ts = self._two_scale_1d[level]
            rx = ts[0][t[0]].rows.get(i, {})
            ry = ts[1][t[1]].rows.get(j, {})
            fine = self.space(k, level + 1)
            fmy = fine.comp_shapes[c][1]
            off = int(fine.offsets[c])
            res: dict[int, Fraction] = {}
            for a, va in rx.items():
                for b, vb in ry.items():
                    for hcol, w in self._expand(k, level + 1, off + a * fmy + b, memo).items():
                        res[hcol] = res.get(hcol, 0) + va * vb * w
            res = {h_: v for h_, v in res.items() if v != 0}
        memo[key] = res
        return res

    def hier_diff_matrix(self, k: int) -> SignedSparseMatrix:
        """Exact matrix of d^k from the hierarchical k-form basis to the (k+1)-form basis."""
        if k in self._dmat:
            return self._dmat[k]
        memo: dict = {}
        cols: dict[int, dict[int, Fraction]] = {}
        for l in range(self.ladder.n_levels):
            src = self.space(k, l)
            tgt = self.space(k + 1, l)
            for f in self.active[k][l]:
                c = int(np.searchsorted(src.offsets, f, side="right") - 1)
                my = src.comp_shapes[c][1]
                i, j = divmod(int(f - src.offsets[c]), my)
                col: dict[int, Fraction] = {}
                for oc, ic, axis, sign in DIFF_TERMS[(k, self.orientation)]:
                    if ic != c:
                        continue
                    mx_o, my_o = tgt.comp_shapes[oc]
                    # B_i' = D_{i-1} - D_i
                    if axis == 0:
                        terms = [((i - 1, j), sign), ((i, j), -sign)]
                        ok = lambda a, b: 0 <= a < mx_o
                    else:
                        terms = [((i, j - 1), sign), ((i, j), -sign)]
                        ok = lambda a, b: 0 <= b < my_o
                    for (a, b), s in terms:
                        if not ok(a, b):
                            continue
                        g = int(tgt.offsets[oc]) + a * my_o + b
                        for hcol, w in self._expand(k + 1, l, g, memo).items():
                            col[hcol] = col.get(hcol, 0) + s * w
                col = {r: v for r, v in col.items() if v != 0}
                if col:
                    cols[int(self._lookup[k][l][f])] = col
        M = SignedSparseMatrix.from_columns((self.dim(k + 1), self.dim(k)), cols)
        self._dmat[k] = M
        return M

    # Greville subgrids ------------------------------------------------

    def subgrid(self, level: int, l_dom: int, k: int) -> list[np.ndarray]:
        """Per-component masks of level functions (BC retained) supported in Omega_{l_dom}."""
        sp_ = self.space(k, level)
        dom = self.ladder.omega(l_dom, level)
        return [sp_.comp_mask(c) & boxes_inside(dom, *sp_.supports(c)) for c in range(sp_.n_components)]

    def subgrid_cells(self, level: int, l_dom: int) -> np.ndarray:
        return self.subgrid(level, l_dom, 2)[0]


def greville_subgrid(hc: HierarchicalComplex, level: int, l_dom: int, k: int) -> list[np.ndarray]:
    if not level <= l_dom:
        raise ValueError("need level <= l_dom")
    return hc.subgrid(level, l_dom, k)


def build_active_sets(ladder: LevelLadder, orientation="standard", bc=True) -> HierarchicalComplex:
    return HierarchicalComplex(ladder, orientation, bc)


def kraft_active_sets(ladder: LevelLadder, k: int, orientation="standard", bc=True) -> list[set[int]]:
    """Literal recursion H_0 = B_0, H_{l+1} = {b in H_l : supp b not in Omega_{l+1}}
    ∪ {b in B_{l+1} : supp b in Omega_{l+1}}, with supports tested element by element.

    Returns the active full-space indices per level. Independent of the
    summed-area-table implementation; intended for cross-checks.
    """
    def elements_of(space: FormSpace, f: int):
        c = 0
        while f >= space.offsets[c + 1]:
            c += 1
        my = space.comp_shapes[c][1]
        i, j = divmod(int(f - space.offsets[c]), my)
        xlo, xhi, ylo, yhi = (a[i, j] for a in space.supports(c))
        return [(x, y) for x in range(xlo, xhi + 1) for y in range(ylo, yhi + 1)]

    def contained(level, f, l_dom):
        if l_dom > ladder.N:
            return False
        at = max(level, l_dom - 1)
        dom = ladder.omega(l_dom, at)
        r = 2 ** (at - level)
        return all(dom[x * r : (x + 1) * r, y * r : (y + 1) * r].all() for x, y in elements_of(spaces[level], f))

    spaces = [ladder.complex(l, orientation, bc).spaces[k] for l in range(ladder.n_levels)]
    H = [{(0, int(f)) for f in spaces[0].dofs}]
    for l in range(ladder.N):
        coarse = {(lv, f) for lv, f in H[-1] if not contained(lv, f, l + 1)}
        fine = {(l + 1, int(f)) for f in spaces[l + 1].dofs if contained(l + 1, f, l + 1)}
        H.append(coarse | fine)
    final = H[-1]
    return [sorted(f for lv, f in final if lv == l) for l in range(ladder.n_levels)]
